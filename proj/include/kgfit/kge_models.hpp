#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kgfit/kg_data.hpp"
#include "kgfit/matrix.hpp"

namespace kgfit {

enum class ModelFamily { transe, distmult, complex, protate, rotate, hake };

/// Lowercase names: transe, distmult, complex, protate, rotate, hake.
std::string family_name(ModelFamily f);
ModelFamily parse_family(const std::string& name);

struct ModelConstants {
    int p_norm = 2;         ///< TransE norm, 1 or 2
    double modulus = 1.0;   ///< pRotatE modulus C
};

/// Relation row width for entity width n.
///
///   transe, distmult, complex  n      (complex: real half, then imaginary)
///   protate                    n      phases
///   rotate                     n/2    phases
///   hake                       n + 1  [phase n/2 | modulus n/2 | lambda]
///
/// Entity rows are width n. complex/rotate read them as [real | imaginary];
/// protate reads all n entries as phases; hake reads the first half
/// (name part) as phases and the second half (description part) as moduli.
std::size_t relation_width(ModelFamily f, std::size_t n);

struct ModelState {
    ModelFamily family = ModelFamily::transe;
    Matrix entities;
    Matrix relations;
    double gamma = 12.0;
    ModelConstants constants;

    std::size_t dim() const { return entities.cols(); }
    /// Throws DimensionError / ConfigError on inconsistent shapes.
    void validate() const;
};

using RowView = std::span<const double>;
using GradView = std::span<double>;

/// Score of one triple from raw rows; higher is more plausible.
double score_rows(ModelFamily f, const ModelConstants& c, RowView h, RowView r, RowView t);

/// Score plus analytic gradients, written (not accumulated) into gh/gr/gt.
/// Kinks of |x| use sign(0) = 0; a zero-length residual norm yields a zero
/// gradient.
double score_grad_rows(ModelFamily f, const ModelConstants& c, RowView h, RowView r, RowView t,
                       GradView gh, GradView gr, GradView gt);

double score(const ModelState& s, EntityId h, RelationId r, EntityId t);

struct ScoreGrad {
    double score = 0.0;
    std::vector<double> grad_h;
    std::vector<double> grad_r;
    std::vector<double> grad_t;
};
ScoreGrad score_grad(const ModelState& s, EntityId h, RelationId r, EntityId t);

/// N(0, psi^2) entries, with phase columns drawn uniform in [0, 2pi) and the
/// hake lambda column set to 1. Throws ConfigError when psi <= 0.
Matrix init_relations(ModelFamily f, std::size_t num_relations, std::size_t n, double psi,
                      std::uint64_t seed);

/// Lowercase hex SHA-256 of the names joined by '\n'.
std::string vocab_hash(const NameTable& table);

/// Writes entities.kgfe, relations.kgfe and meta.json into `dir`.
void save_checkpoint(const std::filesystem::path& dir, const ModelState& s, const Vocab& vocab);
/// Reads a checkpoint; when `vocab` is given its hashes must match.
ModelState load_checkpoint(const std::filesystem::path& dir, const Vocab* vocab = nullptr);

}  // namespace kgfit
