#include "kgfit/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <thread>

#include "kgfit/clustering.hpp"
#include "kgfit/error.hpp"

namespace kgfit {

namespace {

const std::set<EntityId>& known_for(const FilterIndex& filter, const Triple& t, Side side) {
    return side == Side::tail ? filter.tails(t.head, t.rel) : filter.heads(t.rel, t.tail);
}

struct Tally {
    std::size_t greater = 0;
    std::size_t ties = 0;

    double rank() const { return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0; }
};

SideMetrics side_metrics(const std::vector<double>& ranks) {
    SideMetrics m;
    if (ranks.empty()) {
        return m;
    }
    for (double r : ranks) {
        m.mr += r;
        m.mrr += 1.0 / r;
        m.hits1 += r <= 1.0 ? 1.0 : 0.0;
        m.hits5 += r <= 5.0 ? 1.0 : 0.0;
        m.hits10 += r <= 10.0 ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(ranks.size());
    m.mr /= n;
    m.mrr /= n;
    m.hits1 /= n;
    m.hits5 /= n;
    m.hits10 /= n;
    return m;
}

nlohmann::ordered_json metrics_json(const SideMetrics& m) {
    nlohmann::ordered_json j;
    j["mr"] = m.mr;
    j["mrr"] = m.mrr;
    j["hits@1"] = m.hits1;
    j["hits@5"] = m.hits5;
    j["hits@10"] = m.hits10;
    return j;
}

}  // namespace

double rank(const Triple& triple, Side side, const ModelState& state, const FilterIndex& filter,
            std::size_t block_size) {
    const std::size_t num = state.entities.rows();
    const EntityId truth = side == Side::tail ? triple.tail : triple.head;
    if (truth < 0 || static_cast<std::size_t>(truth) >= num) {
        throw EvalError("true entity id out of range");
    }
    const auto& known = known_for(filter, triple, side);
    const auto h = state.entities.row(static_cast<std::size_t>(triple.head));
    const auto r = state.relations.row(static_cast<std::size_t>(triple.rel));
    const auto t = state.entities.row(static_cast<std::size_t>(triple.tail));
    const double target = score_rows(state.family, state.constants, h, r, t);

    block_size = std::max<std::size_t>(block_size, 1);
    std::vector<double> scores(std::min(block_size, num));
    Tally tally;
    for (std::size_t start = 0; start < num; start += block_size) {
        const std::size_t end = std::min(num, start + block_size);
        for (std::size_t c = start; c < end; ++c) {
            const auto cand = state.entities.row(c);
            scores[c - start] = side == Side::tail
                                    ? score_rows(state.family, state.constants, h, r, cand)
                                    : score_rows(state.family, state.constants, cand, r, t);
        }
        for (std::size_t c = start; c < end; ++c) {
            const auto id = static_cast<EntityId>(c);
            if (id == truth || known.count(id)) {
                continue;
            }
            const double s = scores[c - start];
            if (s > target) {
                ++tally.greater;
            } else if (s == target) {
                ++tally.ties;
            }
        }
    }
    return tally.rank();
}

EvalReport metrics_from_ranks(const std::vector<double>& head_ranks,
                              const std::vector<double>& tail_ranks) {
    EvalReport r;
    r.head = side_metrics(head_ranks);
    r.tail = side_metrics(tail_ranks);
    std::vector<double> all = head_ranks;
    all.insert(all.end(), tail_ranks.begin(), tail_ranks.end());
    r.average = side_metrics(all);
    r.triples = std::max(head_ranks.size(), tail_ranks.size());
    return r;
}

EvalReport evaluate(const std::vector<Triple>& split, const ModelState& state,
                    const FilterIndex& filter, const EvalOptions& options,
                    std::vector<RankRow>* per_triple) {
    if (split.empty()) {
        throw EvalError("cannot evaluate an empty split");
    }
    std::vector<double> heads(split.size());
    std::vector<double> tails(split.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            heads[i] = rank(split[i], Side::head, state, filter, options.block_size);
            tails[i] = rank(split[i], Side::tail, state, filter, options.block_size);
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, split.size());
    if (threads == 1) {
        work(0, split.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (split.size() + threads - 1) / threads;
        for (std::size_t b = 0; b < split.size(); b += chunk) {
            pool.emplace_back(work, b, std::min(split.size(), b + chunk));
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (per_triple) {
        per_triple->clear();
        for (std::size_t i = 0; i < split.size(); ++i) {
            per_triple->push_back({split[i], heads[i], tails[i]});
        }
    }
    return metrics_from_ranks(heads, tails);
}

std::string report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["triples"] = r.triples;
    j["tie_convention"] = r.tie_convention;
    j["head"] = metrics_json(r.head);
    j["tail"] = metrics_json(r.tail);
    j["average"] = metrics_json(r.average);
    return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %10s %8s %8s %8s %8s\n", "side", "MR", "MRR", "H@1", "H@5",
                  "H@10");
    out += line;
    auto row = [&](const char* name, const SideMetrics& m) {
        std::snprintf(line, sizeof line, "%-8s %10.2f %8.4f %8.4f %8.4f %8.4f\n", name, m.mr, m.mrr,
                      m.hits1, m.hits5, m.hits10);
        out += line;
    };
    row("head", r.head);
    row("tail", r.tail);
    row("average", r.average);
    std::snprintf(line, sizeof line, "triples: %zu, ties: %s\n", r.triples, r.tie_convention.c_str());
    out += line;
    return out;
}

std::string per_triple_tsv(const std::vector<RankRow>& rows, const Vocab& vocab) {
    std::string out = "head\trelation\ttail\thead_rank\ttail_rank\n";
    for (const auto& row : rows) {
        out += vocab.entities.name(row.triple.head) + "\t" + vocab.relations.name(row.triple.rel) +
               "\t" + vocab.entities.name(row.triple.tail) + "\t" +
               nlohmann::json(row.head_rank).dump() + "\t" + nlohmann::json(row.tail_rank).dump() + "\n";
    }
    return out;
}

double zero_shot_rank(const Matrix& vectors, const Triple& triple, std::span<const double> relation,
                      const FilterIndex* filter) {
    const std::size_t num = vectors.rows();
    if (triple.head < 0 || triple.tail < 0 || static_cast<std::size_t>(triple.head) >= num ||
        static_cast<std::size_t>(triple.tail) >= num) {
        throw DimensionError("zero-shot ranking needs a vector for every entity in the triple");
    }
    if (!relation.empty() && relation.size() != vectors.cols()) {
        throw DimensionError("relation offset width does not match the entity vectors");
    }
    std::vector<double> query(vectors.row(static_cast<std::size_t>(triple.head)).begin(),
                              vectors.row(static_cast<std::size_t>(triple.head)).end());
    for (std::size_t j = 0; j < relation.size(); ++j) {
        query[j] += relation[j];
    }
    const double target = 1.0 - cosine_distance(query, vectors.row(static_cast<std::size_t>(triple.tail)));
    static const std::set<EntityId> kNone;
    const auto& known = filter ? filter->tails(triple.head, triple.rel) : kNone;
    Tally tally;
    for (std::size_t c = 0; c < num; ++c) {
        const auto id = static_cast<EntityId>(c);
        if (id == triple.tail || known.count(id)) {
            continue;
        }
        const double s = 1.0 - cosine_distance(query, vectors.row(c));
        if (s > target) {
            ++tally.greater;
        } else if (s == target) {
            ++tally.ties;
        }
    }
    return tally.rank();
}

}  // namespace kgfit
