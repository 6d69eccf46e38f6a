#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kgfit/matrix.hpp"

namespace kgfit {

/// 1 - <a,b> / (|a||b|). Throws DomainError on a zero vector and
/// DimensionError on a width mismatch.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Upper-triangle pairwise cosine distances over the rows of a matrix.
class DistanceMatrix {
public:
    /// Computed directly from dot products and cached squared norms, so the
    /// only allocation is the condensed matrix itself. Throws DomainError if
    /// any row is zero.
    explicit DistanceMatrix(const Matrix& points);

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const {
        if (i == j) {
            return 0.0;
        }
        if (i > j) {
            std::swap(i, j);
        }
        return d_[offset(i, j)];
    }
    /// Mutable access for i != j.
    double& at(std::size_t i, std::size_t j) {
        if (i > j) {
            std::swap(i, j);
        }
        return d_[offset(i, j)];
    }

private:
    std::size_t offset(std::size_t i, std::size_t j) const {
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_ = 0;
    std::vector<double> d_;
};

/// One agglomeration step. Leaves are 0..n-1; merge k creates node n+k.
struct Merge {
    std::int32_t a = 0;  ///< smaller node id
    std::int32_t b = 0;  ///< larger node id
    double distance = 0.0;
    std::int32_t node = 0;
    std::int32_t size = 0;  ///< leaves under the new node

    bool operator==(const Merge&) const = default;
};

struct Dendrogram {
    std::size_t num_leaves = 0;
    std::vector<Merge> merges;  ///< num_leaves - 1 entries in merge order
};

/// Exact average-linkage (UPGMA) clustering under cosine distance. At every
/// step the globally closest pair of active clusters merges; exact distance
/// ties go to the lexicographically smallest (a, b) node-id pair.
Dendrogram agglomerate(const Matrix& points);
Dendrogram agglomerate(const DistanceMatrix& distances);

struct ClusterLabels {
    double tau = 0.0;
    std::vector<std::int32_t> labels;  ///< entity -> cluster, dense from 0
    std::int32_t num_clusters = 0;
};

/// Flat clusters are the maximal dendrogram subtrees whose internal merge
/// distances are all < tau. Cluster ids are assigned in order of the
/// smallest member id.
ClusterLabels cut(const Dendrogram& dendrogram, double tau);

/// Mean silhouette under cosine distance. Singletons contribute 0. Throws
/// UndefinedScoreError for fewer than two clusters.
double silhouette(const Matrix& points, const std::vector<std::int32_t>& labels);
double silhouette(const DistanceMatrix& distances, const std::vector<std::int32_t>& labels);

struct SweepResult {
    double tau = 0.0;
    double score = 0.0;
    ClusterLabels labels;
    /// (tau, score) for every evaluated threshold, in sweep order.
    std::vector<std::pair<double, double>> trace;
};

struct SweepRange {
    double tau_min = 0.15;
    double tau_max = 0.85;
    double step = 0.01;
};

/// Evaluates tau_min + k*step for k = 0, 1, ... while <= tau_max, skipping
/// thresholds with fewer than two clusters, and returns the argmax of the
/// silhouette (ties to the smaller tau).
SweepResult sweep(const DistanceMatrix& distances, const Dendrogram& dendrogram,
                  const SweepRange& range = {});
SweepResult sweep(const Matrix& points, const SweepRange& range = {});

}  // namespace kgfit
