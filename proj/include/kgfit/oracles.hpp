#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "kgfit/kg_data.hpp"
#include "kgfit/kge_models.hpp"
#include "kgfit/matrix.hpp"

// Brute-force reference implementations for tests. Nothing here calls the
// clustering, silhouette or ranking code they are compared against.
namespace kgfit::oracle {

struct OracleMerge {
    std::int32_t a = 0;
    std::int32_t b = 0;
    double distance = 0.0;
    std::int32_t size = 0;
};

/// Average linkage by recomputing every cluster-pair mean distance from the
/// raw points at every step, O(n^3). Ties go to the smallest (a, b) pair.
std::vector<OracleMerge> linkage(const Matrix& points);

/// Direct double loop; throws UndefinedScoreError below two clusters.
double silhouette(const Matrix& points, const std::vector<std::int32_t>& labels);

/// Materializes the filtered candidate list, sorts it by score and reads the
/// mean rank of the true entity's tie group.
double rank(const ModelState& state, const Triple& triple, Side side, const std::set<Triple>& known);

struct Metrics {
    double mr = 0, mrr = 0, hits1 = 0, hits5 = 0, hits10 = 0;
};

/// Pools head and tail ranks over the split.
Metrics evaluate(const ModelState& state, const std::vector<Triple>& split,
                 const std::set<Triple>& known);

/// Zero-shot tail rank by cosine similarity of (e_h + r) to every tail.
double zero_shot_rank(const Matrix& vectors, const Triple& triple, const std::vector<double>& relation,
                      const std::set<Triple>& known);

}  // namespace kgfit::oracle
