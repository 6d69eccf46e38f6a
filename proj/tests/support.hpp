#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include "kgfit/kge_models.hpp"
#include "kgfit/matrix.hpp"
#include "kgfit/rng.hpp"

namespace testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& label) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("kgfit_" + label + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline kgfit::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    kgfit::Rng rng(seed);
    kgfit::Matrix m(rows, cols);
    for (auto& x : m.data()) {
        x = kgfit::standard_normal(rng);
    }
    return m;
}

inline std::vector<double> random_vector(std::size_t n, kgfit::Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = scale * kgfit::standard_normal(rng);
    }
    return v;
}

/// |a - n| / max(1, |a|, |n|): relative for large gradients, absolute for
/// entries near zero.
inline double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Central difference of f at x along every coordinate, compared against
/// `analytic`. Returns the largest rel_error.
inline double max_fd_error(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, const std::vector<double>& analytic,
                           double eps = 1e-5) {
    double worst = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = f(x);
        x[i] = keep - eps;
        const double down = f(x);
        x[i] = keep;
        worst = std::max(worst, rel_error(analytic[i], (up - down) / (2 * eps)));
    }
    return worst;
}

/// Random (h, r, t) rows for a family at entity width n, packed as one
/// vector [h | r | t].
inline std::vector<double> random_triple_rows(kgfit::ModelFamily f, std::size_t n, kgfit::Rng& rng) {
    const std::size_t m = kgfit::relation_width(f, n);
    std::vector<double> x(2 * n + m);
    for (auto& v : x) v = kgfit::standard_normal(rng);
    const bool phases = f == kgfit::ModelFamily::protate || f == kgfit::ModelFamily::rotate;
    for (std::size_t j = 0; j < m; ++j) {
        if (phases || (f == kgfit::ModelFamily::hake && j < n / 2)) {
            x[n + j] = 6.283185307179586 * kgfit::uniform_unit(rng);
        }
    }
    if (f == kgfit::ModelFamily::hake) x[n + m - 1] = 0.5 + kgfit::uniform_unit(rng);
    return x;
}

/// Largest rel_error between the analytic score gradient and central
/// differences at one random instance.
inline double score_fd_error(kgfit::ModelFamily f, const kgfit::ModelConstants& c, std::size_t n,
                             kgfit::Rng& rng) {
    const std::size_t m = kgfit::relation_width(f, n);
    const auto x = random_triple_rows(f, n, rng);
    auto split = [&](const std::vector<double>& v) {
        std::span<const double> all(v);
        return std::array<std::span<const double>, 3>{all.subspan(0, n), all.subspan(n, m), all.subspan(n + m, n)};
    };
    std::vector<double> g(x.size());
    std::span<double> gs(g);
    const auto rows = split(x);
    kgfit::score_grad_rows(f, c, rows[0], rows[1], rows[2], gs.subspan(0, n), gs.subspan(n, m),
                           gs.subspan(n + m, n));
    auto fn = [&](const std::vector<double>& v) {
        const auto r = split(v);
        return kgfit::score_rows(f, c, r[0], r[1], r[2]);
    };
    return max_fd_error(fn, x, g);
}

}  // namespace testing
