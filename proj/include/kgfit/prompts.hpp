#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgfit::prompts {

/// First line of every rendered prompt; identifies the request kind.
inline constexpr std::string_view kDescribeHeader = "### Task: describe entity";
inline constexpr std::string_view kNameHeader = "### Task: name cluster";
inline constexpr std::string_view kSplitHeader = "### Task: split cluster";
inline constexpr std::string_view kRefineHeader = "### Task: refine hierarchy";

enum class Kind { describe, name, split, refine, unknown };
Kind kind_of(std::string_view prompt);

/// Raw template text with `{{key}}` placeholders.
std::string_view describe_template();
std::string_view name_template();
std::string_view split_template();
std::string_view refine_template();

/// Substitutes every `{{key}}`; throws FormatError on an unknown key left in
/// the output.
std::string render(std::string_view tmpl,
                   const std::vector<std::pair<std::string, std::string>>& values);

std::string render_describe(const std::string& entity, const std::optional<std::string>& hint);
std::string render_name(const std::vector<std::string>& entities);
std::string render_split(const std::string& cluster_name, const std::vector<std::string>& entities);

/// One side of a refine query.
struct ClusterView {
    std::string name;
    bool is_leaf = true;
    std::vector<std::string> child_names;  ///< empty for leaves
    std::vector<std::string> entities;     ///< every entity under the node
};

std::string render_refine(const ClusterView& a, const ClusterView& b);

/// Appended to a prompt when the previous answer failed validation.
std::string with_violation(const std::string& prompt, const std::string& violation);

// Prompt parsers, used by the mock backend.
std::string parse_describe_prompt(std::string_view prompt);
std::vector<std::string> parse_entity_list_prompt(std::string_view prompt);
std::string parse_split_prompt_name(std::string_view prompt);
struct RefineQuery {
    ClusterView a;
    ClusterView b;
};
RefineQuery parse_refine_prompt(std::string_view prompt);

}  // namespace kgfit::prompts
