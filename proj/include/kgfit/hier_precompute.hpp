#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <vector>

#include "kgfit/hierarchy.hpp"
#include "kgfit/matrix.hpp"

namespace kgfit {

using NodeVectors = std::map<NodeId, std::vector<double>>;

/// Mean of the entity rows of `embeddings` under each leaf. Throws
/// InvariantError on an empty leaf.
NodeVectors cluster_embeddings(const HierarchyTree& tree, const Matrix& embeddings);

/// For every reachable node, the uniform mean of the cluster embeddings of
/// the leaves in its subtree (a leaf maps to its own cluster embedding).
NodeVectors parent_embeddings(const HierarchyTree& tree, const NodeVectors& clusters);

/// Other leaves under the ancestor `ancestor_levels` above `leaf` (clipped at
/// the root), nearest first by cosine distance between cluster embeddings,
/// ties by node id, truncated to `m`.
std::vector<NodeId> neighbor_clusters(const HierarchyTree& tree, NodeId leaf,
                                      const NodeVectors& clusters, std::size_t m,
                                      int ancestor_levels = 2);

/// beta_j = beta0 * exp(-phi * j) for j = 1..h-1. Throws ConfigError when
/// beta0 <= 0 or phi < 0, DomainError when h < 1.
std::vector<double> beta_weights(std::size_t h, double beta0, double phi);

struct PrecompConfig {
    std::size_t m = 5;
    int ancestor_levels = 2;
    double beta0 = 1.2;
    double phi = 0.4;
};

struct LeafInfo {
    NodeId node = 0;
    std::vector<EntityId> members;
    std::vector<NodeId> parents;    ///< leaf's parent first, root last
    std::vector<NodeId> neighbors;  ///< at most m other leaves
    std::vector<double> betas;      ///< beta_1..beta_{h-1}

    /// Nodes on the leaf-to-root path, both ends included.
    std::size_t depth() const { return parents.size() + 1; }
};

/// Everything the hierarchical constraint needs, derived from a tree and the
/// initial entity embeddings. Row k of `node_vectors` is the embedding of
/// node k (cluster mean for leaves, mean of cluster means otherwise).
struct HierPrecomp {
    PrecompConfig config;
    std::size_t dim = 0;
    std::vector<std::int32_t> leaf_of;  ///< entity -> index into `leaves`
    std::vector<LeafInfo> leaves;
    Matrix node_vectors;

    const LeafInfo& leaf_for(EntityId e) const { return leaves.at(static_cast<std::size_t>(leaf_of.at(e))); }
    std::span<const double> vec(NodeId node) const { return node_vectors.row(static_cast<std::size_t>(node)); }

    /// Recomputes cluster and parent vectors from `embeddings`; topology,
    /// neighbor lists and weights stay as they are.
    void refresh(const Matrix& embeddings);

    bool operator==(const HierPrecomp&) const;
};

/// `tree` should be canonical; it is canonicalized otherwise.
HierPrecomp build_precomp(const HierarchyTree& tree, const Matrix& embeddings,
                          const PrecompConfig& config = {});

/// Writes `<stem>.kgfe` (node vectors) and `<stem>.json` (index).
void save_precomp(const std::filesystem::path& stem, const HierPrecomp& p);
HierPrecomp load_precomp(const std::filesystem::path& stem);

}  // namespace kgfit
