#pragma once

#include <stdexcept>
#include <string>

namespace kgfit {

/// Base class for every error raised by the library. The CLI maps any
/// `Error` to a nonzero exit code with the message on stderr.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define KGFIT_DEFINE_ERROR(Name)            \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

KGFIT_DEFINE_ERROR(ParseError);
KGFIT_DEFINE_ERROR(VocabError);
KGFIT_DEFINE_ERROR(DatasetError);
KGFIT_DEFINE_ERROR(DimensionError);
KGFIT_DEFINE_ERROR(ConfigError);
KGFIT_DEFINE_ERROR(DomainError);
KGFIT_DEFINE_ERROR(SizeError);
KGFIT_DEFINE_ERROR(InvariantError);
KGFIT_DEFINE_ERROR(UndefinedScoreError);
KGFIT_DEFINE_ERROR(SweepError);
KGFIT_DEFINE_ERROR(ClientError);
KGFIT_DEFINE_ERROR(FormatError);
KGFIT_DEFINE_ERROR(CacheMissError);
KGFIT_DEFINE_ERROR(SamplingError);
KGFIT_DEFINE_ERROR(DivergenceError);
KGFIT_DEFINE_ERROR(EvalError);
KGFIT_DEFINE_ERROR(IoError);

#undef KGFIT_DEFINE_ERROR

}  // namespace kgfit
