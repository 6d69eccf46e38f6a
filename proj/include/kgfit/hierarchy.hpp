#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgfit/clustering.hpp"
#include "kgfit/kg_data.hpp"

namespace kgfit {

using NodeId = std::int32_t;

enum class TreeState { seed, split, refined };

struct HierarchyNode {
    std::optional<std::string> name;
    std::vector<NodeId> children;
    std::vector<EntityId> entities;  ///< nonempty exactly at leaves

    bool is_leaf() const { return children.empty(); }
};

/// Rooted tree whose leaves are entity clusters. Node ids are indices into
/// `nodes`; canonical trees number nodes in pre-order from the root (0).
struct HierarchyTree {
    std::vector<HierarchyNode> nodes;
    NodeId root = 0;
    TreeState state = TreeState::seed;

    const HierarchyNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
    HierarchyNode& node(NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }

    /// Nodes reachable from the root in pre-order (children left to right).
    std::vector<NodeId> preorder() const;
    /// Reachable leaves in pre-order.
    std::vector<NodeId> leaves() const;
    /// parent[id] for reachable nodes; -1 for the root and unreachable ids.
    std::vector<NodeId> parents() const;
    /// Depth with root = 0; -1 for unreachable ids.
    std::vector<std::int32_t> depths() const;

    std::size_t num_reachable() const { return preorder().size(); }

    /// Drops unreachable nodes and renumbers the rest in pre-order.
    HierarchyTree canonical() const;

    /// Checks: acyclic single root, leaves nonempty, internal nodes hold no
    /// entities, and leaf entity lists partition 0..num_entities-1. Throws
    /// InvariantError.
    void validate(std::size_t num_entities) const;

    /// Sorted multiset of entity ids over all reachable leaves.
    std::vector<EntityId> leaf_entities() const;
};

/// Seed hierarchy: the dendrogram is walked top-down (left = smaller child
/// id first); the first leaf reached from each flat cluster is replaced by
/// the whole cluster and later leaves of the same cluster are removed. Empty
/// internal nodes are pruned and single-child nodes collapsed into their
/// child. Throws InvariantError if `labels` is not a partition of the
/// dendrogram leaves.
HierarchyTree build_seed(const Dendrogram& dendrogram, const ClusterLabels& labels);

/// JSON form `{"id", "name", "entities", "children"}` nested from the root.
/// Entities are written by name; internal nodes carry `"entities": null`.
std::string tree_to_json(const HierarchyTree& tree, const NameTable& entities, int indent = 2);
HierarchyTree tree_from_json(const std::string& text, const NameTable& entities,
                             TreeState state = TreeState::seed);

void save_tree(const std::filesystem::path& path, const HierarchyTree& tree,
               const NameTable& entities);
HierarchyTree load_tree(const std::filesystem::path& path, const NameTable& entities,
                        TreeState state = TreeState::seed);

/// True when both trees have identical shape and identical leaf entity
/// lists (names ignored).
bool same_topology(const HierarchyTree& a, const HierarchyTree& b);

}  // namespace kgfit
