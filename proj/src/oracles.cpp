#include "kgfit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "kgfit/error.hpp"

namespace kgfit::oracle {

namespace {

double cos_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double d = 1.0 - dot / std::sqrt(na * nb);
    return std::clamp(d, 0.0, 2.0);
}

std::vector<double> row_copy(const Matrix& m, std::size_t i) {
    std::vector<double> out;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        out.push_back(m(i, j));
    }
    return out;
}

double rank_in(std::vector<double> scores, double target) {
    std::sort(scores.begin(), scores.end(), std::greater<>());
    const auto [lo, hi] = std::equal_range(scores.begin(), scores.end(), target, std::greater<>());
    const auto first = static_cast<double>(lo - scores.begin()) + 1.0;
    const auto tied_others = static_cast<double>(hi - lo) - 1.0;
    return first + tied_others / 2.0;
}

}  // namespace

std::vector<OracleMerge> linkage(const Matrix& points) {
    const std::size_t n = points.rows();
    std::vector<std::vector<double>> p;
    for (std::size_t i = 0; i < n; ++i) {
        p.push_back(row_copy(points, i));
    }
    struct Cluster {
        std::int32_t id;
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) {
        active.push_back({static_cast<std::int32_t>(i), {i}});
    }
    std::vector<OracleMerge> out;
    std::int32_t next = static_cast<std::int32_t>(n);
    while (active.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::pair<std::int32_t, std::int32_t> best_ids{0, 0};
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                double sum = 0;
                for (auto x : active[i].members) {
                    for (auto y : active[j].members) {
                        sum += cos_dist(p[x], p[y]);
                    }
                }
                const double d = sum / static_cast<double>(active[i].members.size() * active[j].members.size());
                const std::pair<std::int32_t, std::int32_t> ids = std::minmax(active[i].id, active[j].id);
                if (d < best || (d == best && ids < best_ids)) {
                    best = d;
                    best_ids = ids;
                    bi = i;
                    bj = j;
                }
            }
        }
        Cluster merged{next++, active[bi].members};
        merged.members.insert(merged.members.end(), active[bj].members.begin(), active[bj].members.end());
        out.push_back({best_ids.first, best_ids.second, best, static_cast<std::int32_t>(merged.members.size())});
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(std::move(merged));
    }
    return out;
}

double silhouette(const Matrix& points, const std::vector<std::int32_t>& labels) {
    const std::size_t n = points.rows();
    std::map<std::int32_t, std::size_t> sizes;
    for (auto l : labels) {
        ++sizes[l];
    }
    if (sizes.size() < 2) {
        throw UndefinedScoreError("silhouette needs at least two clusters");
    }
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] == 1) {
            continue;
        }
        std::map<std::int32_t, double> sum;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sum[labels[j]] += cos_dist(row_copy(points, i), row_copy(points, j));
            }
        }
        const double a = sum[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [l, s] : sizes) {
            if (l != labels[i]) {
                b = std::min(b, sum[l] / static_cast<double>(s));
            }
        }
        const double m = std::max(a, b);
        total += m > 0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

double rank(const ModelState& state, const Triple& triple, Side side, const std::set<Triple>& known) {
    const double target = score(state, triple.head, triple.rel, triple.tail);
    std::vector<double> scores;
    for (std::size_t c = 0; c < state.entities.rows(); ++c) {
        Triple cand = triple;
        (side == Side::tail ? cand.tail : cand.head) = static_cast<EntityId>(c);
        if (cand != triple && known.count(cand)) {
            continue;
        }
        scores.push_back(score(state, cand.head, cand.rel, cand.tail));
    }
    return rank_in(std::move(scores), target);
}

Metrics evaluate(const ModelState& state, const std::vector<Triple>& split,
                 const std::set<Triple>& known) {
    std::vector<double> ranks;
    for (const auto& t : split) {
        ranks.push_back(rank(state, t, Side::head, known));
    }
    for (const auto& t : split) {
        ranks.push_back(rank(state, t, Side::tail, known));
    }
    Metrics m;
    for (double r : ranks) {
        m.mr += r;
        m.mrr += 1.0 / r;
        m.hits1 += r <= 1 ? 1.0 : 0.0;
        m.hits5 += r <= 5 ? 1.0 : 0.0;
        m.hits10 += r <= 10 ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(ranks.size());
    m.mr /= n;
    m.mrr /= n;
    m.hits1 /= n;
    m.hits5 /= n;
    m.hits10 /= n;
    return m;
}

double zero_shot_rank(const Matrix& vectors, const Triple& triple, const std::vector<double>& relation,
                      const std::set<Triple>& known) {
    auto q = row_copy(vectors, static_cast<std::size_t>(triple.head));
    for (std::size_t j = 0; j < relation.size(); ++j) {
        q[j] += relation[j];
    }
    std::vector<double> sims;
    double target = 0;
    for (std::size_t c = 0; c < vectors.rows(); ++c) {
        Triple cand = triple;
        cand.tail = static_cast<EntityId>(c);
        const double s = 1.0 - cos_dist(q, row_copy(vectors, c));
        if (cand == triple) {
            target = s;
        } else if (known.count(cand)) {
            continue;
        }
        sims.push_back(s);
    }
    return rank_in(std::move(sims), target);
}

}  // namespace kgfit::oracle
