#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kgfit/hierarchy.hpp"
#include "kgfit/kg_data.hpp"
#include "kgfit/llm_client.hpp"

namespace kgfit {

struct RefineOptions {
    std::size_t min_entities_in_leaf = 4;
    int max_retries = 2;  ///< extra attempts after a schema violation
};

/// Schema violations that survived every retry; the tree is never aborted.
struct RefineReport {
    std::vector<std::string> warnings;
    std::size_t calls = 0;
};

enum class RefineTag { no_update, parent_merge, leaf_merge, left_includes_right, right_includes_left };

struct RefineAction {
    RefineTag tag = RefineTag::no_update;
    std::string name;
};

struct SplitGroup {
    std::string name;
    std::vector<std::string> entities;
};

// Response parsers. Each throws FormatError with a message suitable for
// feeding back to the model.
std::string parse_description(const std::string& response);
std::string parse_name_response(const std::string& response);
/// Groups must partition `entities` exactly (after trimming) and number 1..5.
std::vector<SplitGroup> parse_split_response(const std::string& response,
                                             const std::vector<std::string>& entities);
RefineAction parse_refine_response(const std::string& response);

/// Asks for a one-sentence description. Empty output raises FormatError
/// after the retries run out.
std::string describe_entity(const std::string& entity, const std::optional<std::string>& hint,
                            ChatClient& client, int max_retries = 2);

/// Recursively offers every leaf with at least `min_entities_in_leaf`
/// entities to the model for splitting. Requires a seed-state tree.
HierarchyTree split_clusters(const HierarchyTree& tree, const NameTable& entities, ChatClient& client,
                             const RefineOptions& options = {}, RefineReport* report = nullptr);

/// Post-order pass over a split-state tree: leaves are (re)named, and each
/// node with exactly two children is rewritten by the action the model
/// picks for (node, left, right).
HierarchyTree refine_bottom_up(const HierarchyTree& tree, const NameTable& entities,
                               ChatClient& client, const RefineOptions& options = {},
                               RefineReport* report = nullptr);

struct MinMaxAvg {
    double min = 0;
    double max = 0;
    double avg = 0;
};

struct HierarchyStats {
    std::size_t clusters = 0;
    std::size_t nodes = 0;
    MinMaxAvg entities_per_cluster;
    MinMaxAvg cluster_depth;  ///< leaf depth, root = 0
    MinMaxAvg branch_factor;  ///< over internal nodes; zeros when there are none
};

HierarchyStats stats(const HierarchyTree& tree);
std::string format_stats(const HierarchyStats& s);

}  // namespace kgfit
