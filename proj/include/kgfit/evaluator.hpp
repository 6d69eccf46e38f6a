#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kgfit/kg_data.hpp"
#include "kgfit/kge_models.hpp"
#include "kgfit/matrix.hpp"

namespace kgfit {

/// Filtered rank of the true entity on `side`: every entity is scored as the
/// replacement, candidates forming another known triple are dropped, and
/// rank = 1 + #(score > true) + #(score == true, candidate != true) / 2.
double rank(const Triple& triple, Side side, const ModelState& state, const FilterIndex& filter,
            std::size_t block_size = 4096);

struct SideMetrics {
    double mr = 0;
    double mrr = 0;
    double hits1 = 0;
    double hits5 = 0;
    double hits10 = 0;
};

struct EvalReport {
    SideMetrics head;
    SideMetrics tail;
    SideMetrics average;  ///< over both directions pooled
    std::size_t triples = 0;
    std::string tie_convention = "mean";
};

struct RankRow {
    Triple triple;
    double head_rank = 0;
    double tail_rank = 0;
};

struct EvalOptions {
    std::size_t block_size = 4096;
    unsigned threads = 1;
};

/// Metrics over both prediction directions. Throws EvalError on an empty
/// split. `per_triple`, when given, receives the ranks in split order.
EvalReport evaluate(const std::vector<Triple>& split, const ModelState& state,
                    const FilterIndex& filter, const EvalOptions& options = {},
                    std::vector<RankRow>* per_triple = nullptr);

/// Aggregates precomputed ranks; either list may be empty.
EvalReport metrics_from_ranks(const std::vector<double>& head_ranks,
                              const std::vector<double>& tail_ranks);

/// JSON with fixed key order, and an aligned text table.
std::string report_json(const EvalReport& r);
std::string report_table(const EvalReport& r);
/// head, relation, tail, head_rank, tail_rank per line (names, not ids).
std::string per_triple_tsv(const std::vector<RankRow>& rows, const Vocab& vocab);

/// Tail rank by descending cosine similarity between (e_head + r) and every
/// candidate tail vector, filtered and with the mean tie convention. An
/// empty `relation` means r = 0. Throws DimensionError on missing vectors.
double zero_shot_rank(const Matrix& vectors, const Triple& triple, std::span<const double> relation,
                      const FilterIndex* filter = nullptr);

}  // namespace kgfit
