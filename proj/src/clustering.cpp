#include "kgfit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "kgfit/error.hpp"

namespace kgfit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// sqrt(x*x) == x in IEEE arithmetic, so identical rows give exactly 0.
double cosine_from_parts(double ab, double aa, double bb) {
    const double d = 1.0 - ab / std::sqrt(aa * bb);
    return std::clamp(d, 0.0, 2.0);
}

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine distance of vectors with different widths");
    }
    const double aa = dot(a, a);
    const double bb = dot(b, b);
    if (aa == 0.0 || bb == 0.0) {
        throw DomainError("cosine distance undefined for a zero vector");
    }
    return cosine_from_parts(dot(a, b), aa, bb);
}

DistanceMatrix::DistanceMatrix(const Matrix& points) : n_(points.rows()) {
    std::vector<double> sq(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        sq[i] = dot(points.row(i), points.row(i));
        if (sq[i] == 0.0) {
            throw DomainError("row " + std::to_string(i) + " is a zero vector");
        }
    }
    d_.resize(n_ > 1 ? n_ * (n_ - 1) / 2 : 0);
    for (std::size_t i = 0; i < n_; ++i) {
        const auto ri = points.row(i);
        for (std::size_t j = i + 1; j < n_; ++j) {
            d_[offset(i, j)] = cosine_from_parts(dot(ri, points.row(j)), sq[i], sq[j]);
        }
    }
}

namespace {

struct PairKey {
    double dist;
    std::int32_t lo;
    std::int32_t hi;

    bool operator<(const PairKey& o) const {
        return std::tie(dist, lo, hi) < std::tie(o.dist, o.lo, o.hi);
    }
};

PairKey make_key(double dist, std::int32_t x, std::int32_t y) {
    return {dist, std::min(x, y), std::max(x, y)};
}

}  // namespace

Dendrogram agglomerate(const Matrix& points) {
    if (points.rows() < 2) {
        throw SizeError("agglomerative clustering needs at least 2 points");
    }
    return agglomerate(DistanceMatrix(points));
}

// Generic pairwise algorithm with a cached nearest neighbour per slot and
// Lance-Williams updates for average linkage. A merged cluster reuses the
// slot of its first member.
Dendrogram agglomerate(const DistanceMatrix& dm) {
    const std::size_t n = dm.size();
    if (n < 2) {
        throw SizeError("agglomerative clustering needs at least 2 points");
    }
    DistanceMatrix d = dm;
    std::vector<char> active(n, 1);
    std::vector<std::int32_t> id(n);
    std::vector<std::int32_t> size(n, 1);
    std::iota(id.begin(), id.end(), 0);
    std::vector<std::size_t> nn(n, 0);
    std::vector<PairKey> nn_key(n);

    auto rescan = [&](std::size_t s) {
        PairKey best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::int32_t>::max(),
                     std::numeric_limits<std::int32_t>::max()};
        std::size_t best_slot = s;
        for (std::size_t t = 0; t < n; ++t) {
            if (t == s || !active[t]) {
                continue;
            }
            const PairKey k = make_key(d(s, t), id[s], id[t]);
            if (k < best) {
                best = k;
                best_slot = t;
            }
        }
        nn[s] = best_slot;
        nn_key[s] = best;
    };

    for (std::size_t s = 0; s < n; ++s) {
        rescan(s);
    }

    Dendrogram out;
    out.num_leaves = n;
    out.merges.reserve(n - 1);
    std::size_t alive = n;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t s = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (active[k] && (s == n || nn_key[k] < nn_key[s])) {
                s = k;
            }
        }
        const std::size_t t = nn[s];
        const auto new_id = static_cast<std::int32_t>(n + step);
        out.merges.push_back({std::min(id[s], id[t]), std::max(id[s], id[t]), nn_key[s].dist,
                              new_id, size[s] + size[t]});

        const double ws = size[s];
        const double wt = size[t];
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == s || k == t) {
                continue;
            }
            d.at(k, s) = (ws * d(k, s) + wt * d(k, t)) / (ws + wt);
        }
        active[t] = 0;
        id[s] = new_id;
        size[s] += size[t];
        --alive;
        if (alive < 2) {
            break;
        }

        rescan(s);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == s) {
                continue;
            }
            if (nn[k] == s || nn[k] == t) {
                rescan(k);
            } else {
                const PairKey cand = make_key(d(k, s), id[k], id[s]);
                if (cand < nn_key[k]) {
                    nn[k] = s;
                    nn_key[k] = cand;
                }
            }
        }
    }
    return out;
}

ClusterLabels cut(const Dendrogram& dendrogram, double tau) {
    const std::size_t n = dendrogram.num_leaves;
    std::vector<std::int32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    // below[node] : every merge inside the subtree is < tau.
    std::vector<char> below(n + dendrogram.merges.size(), 1);
    // Any leaf under each node, for union-find.
    std::vector<std::int32_t> rep(n + dendrogram.merges.size());
    std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), 0);
    for (const auto& m : dendrogram.merges) {
        rep[m.node] = rep[m.a];
        below[m.node] = below[m.a] && below[m.b] && m.distance < tau;
        if (below[m.node]) {
            parent[find(rep[m.b])] = find(rep[m.a]);
        }
    }
    ClusterLabels out;
    out.tau = tau;
    out.labels.assign(n, -1);
    std::vector<std::int32_t> root_label(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find(static_cast<std::int32_t>(i));
        if (root_label[r] < 0) {
            root_label[r] = out.num_clusters++;
        }
        out.labels[i] = root_label[r];
    }
    return out;
}

double silhouette(const Matrix& points, const std::vector<std::int32_t>& labels) {
    if (labels.size() != points.rows()) {
        throw DimensionError("label count does not match point count");
    }
    return silhouette(DistanceMatrix(points), labels);
}

double silhouette(const DistanceMatrix& dm, const std::vector<std::int32_t>& labels) {
    const std::size_t n = dm.size();
    if (labels.size() != n) {
        throw DimensionError("label count does not match point count");
    }
    std::int32_t k = 0;
    for (auto l : labels) {
        if (l < 0) {
            throw InvariantError("negative cluster label");
        }
        k = std::max(k, l + 1);
    }
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (auto l : labels) {
        ++count[l];
    }
    const auto nonempty = std::count_if(count.begin(), count.end(), [](auto c) { return c > 0; });
    if (nonempty < 2) {
        throw UndefinedScoreError("silhouette needs at least two clusters");
    }
    std::vector<double> sums(static_cast<std::size_t>(k));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = labels[i];
        if (count[own] == 1) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sums[labels[j]] += dm(i, j);
            }
        }
        const double a = sums[own] / static_cast<double>(count[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::int32_t c = 0; c < k; ++c) {
            if (c != own && count[c] > 0) {
                b = std::min(b, sums[c] / static_cast<double>(count[c]));
            }
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) {
            total += (b - a) / denom;
        }
    }
    return total / static_cast<double>(n);
}

SweepResult sweep(const DistanceMatrix& distances, const Dendrogram& dendrogram,
                  const SweepRange& range) {
    if (!(range.tau_min < range.tau_max) || !(range.step > 0.0)) {
        throw ConfigError("sweep needs tau_min < tau_max and step > 0");
    }
    SweepResult best;
    bool found = false;
    // Cuts are nested, so equal cluster counts mean identical partitions.
    std::map<std::int32_t, double> by_count;
    for (std::size_t k = 0;; ++k) {
        const double tau = range.tau_min + static_cast<double>(k) * range.step;
        if (tau > range.tau_max + 1e-12) {
            break;
        }
        ClusterLabels labels = cut(dendrogram, tau);
        if (labels.num_clusters < 2) {
            continue;
        }
        double score;
        if (auto it = by_count.find(labels.num_clusters); it != by_count.end()) {
            score = it->second;
        } else {
            score = silhouette(distances, labels.labels);
            by_count.emplace(labels.num_clusters, score);
        }
        best.trace.emplace_back(tau, score);
        if (!found || score > best.score) {
            found = true;
            best.tau = tau;
            best.score = score;
            best.labels = std::move(labels);
        }
    }
    if (!found) {
        throw SweepError("no threshold in the sweep range yields two or more clusters");
    }
    return best;
}

SweepResult sweep(const Matrix& points, const SweepRange& range) {
    DistanceMatrix dm(points);
    return sweep(dm, agglomerate(dm), range);
}

}  // namespace kgfit
