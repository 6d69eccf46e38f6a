#pragma once

#include <functional>

#include "kgfit/clustering.hpp"
#include "kgfit/fixtures.hpp"
#include "kgfit/hier_precompute.hpp"
#include "kgfit/text_embed.hpp"
#include "kgfit/trainer.hpp"
#include "support.hpp"

namespace testing {

/// Everything train() needs for a toy KG, wired the way the CLI does it:
/// seed tree from the enriched vectors, precompute from the initial
/// entity rows, sliced text as anchors.
struct ToySetup {
    kgfit::HierarchyTree tree;
    kgfit::Matrix sliced;
    kgfit::ModelState init;
    kgfit::HierPrecomp precomp;
};

inline ToySetup toy_setup(const kgfit::ToyKG& toy, const kgfit::TrainConfig& cfg) {
    ToySetup s;
    const auto enriched = kgfit::enrich(toy.text);
    const auto swept = kgfit::sweep(enriched);
    s.tree = kgfit::build_seed(kgfit::agglomerate(enriched), swept.labels);
    s.sliced = kgfit::slice_init(toy.text, cfg.dim);
    s.init = kgfit::initial_state(cfg, s.sliced, toy.data.vocab.num_relations());
    s.precomp = kgfit::build_precomp(s.tree, s.init.entities, {cfg.neighbors, 2, cfg.beta0, cfg.phi});
    return s;
}

/// Mean cosine distance between each entity row and its anchor row.
inline double mean_anchor_distance(const kgfit::Matrix& entities, const kgfit::Matrix& anchors) {
    double sum = 0;
    for (std::size_t i = 0; i < entities.rows(); ++i) {
        sum += kgfit::cosine_distance(entities.row(i), anchors.row(i));
    }
    return sum / static_cast<double>(entities.rows());
}

/// Central differences of `loss` over every entity and relation entry of
/// `state`, against the sparse analytic gradient. Returns the largest
/// rel_error.
inline double table_fd_error(const kgfit::ModelState& state, const kgfit::SparseGrad& grad,
                             const std::function<double(const kgfit::ModelState&)>& loss) {
    const std::size_t ne = state.entities.data().size();
    std::vector<double> x = state.entities.data();
    x.insert(x.end(), state.relations.data().begin(), state.relations.data().end());
    std::vector<double> analytic(x.size(), 0.0);
    const std::size_t n = state.entities.cols();
    const std::size_t w = state.relations.cols();
    for (const auto& [id, v] : grad.entities) {
        std::copy(v.begin(), v.end(), analytic.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(id) * n));
    }
    for (const auto& [id, v] : grad.relations) {
        std::copy(v.begin(), v.end(),
                  analytic.begin() + static_cast<std::ptrdiff_t>(ne + static_cast<std::size_t>(id) * w));
    }
    kgfit::ModelState probe = state;
    auto fn = [&](const std::vector<double>& v) {
        std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(ne), probe.entities.data().begin());
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(ne), v.end(), probe.relations.data().begin());
        return loss(probe);
    };
    return max_fd_error(fn, x, analytic);
}

}  // namespace testing
