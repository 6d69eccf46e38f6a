#include "kgfit/prompts.hpp"

#include <map>

#include "kgfit/error.hpp"

namespace kgfit::prompts {

namespace {

constexpr std::string_view kDescribe = R"(### Task: describe entity
Briefly describe {{entity}} with the format "{{entity}} is a [description]".
The description must be a single concrete sentence that covers several aspects of the entity while staying short.
Example: apple is a round fruit with red, green, or yellow skin and crisp, juicy flesh.
{{hint}}
Entity: {{entity}}
Description:)";

constexpr std::string_view kName = R"(### Task: name cluster
The entities below were grouped together from a knowledge graph.
Give the group a clear, concise name that describes every entity in it.

Entities:
{{entities}}

Output Format:
Name: <cluster name>)";

constexpr std::string_view kSplit = R"(### Task: split cluster
You are given a cluster of entities from a knowledge graph.

Cluster name: {{name}}
Entities:
{{entities}}

Analyze the entities and decide whether they fall into distinct subclusters by common attributes such as characteristics, themes, or genres.
- Use between 1 and 5 subclusters.
- Give each subcluster a unique, concise name that describes all of its entities and distinguishes it from the others.
- If the entities are already well grouped, return one subcluster holding all of them.
- Every entity must appear in exactly one subcluster, spelled exactly as given.

Output Format:
## <subcluster name>
- <entity>
- <entity>
## <subcluster name>
- <entity>)";

constexpr std::string_view kRefine = R"(### Task: refine hierarchy
Two sibling clusters, A and B, share a parent in a hierarchy of knowledge graph entities.
Decide how they relate and pick exactly one update.

{{cluster_a}}

{{cluster_b}}

Update options:
NO UPDATE: A and B cannot be merged and neither belongs to the other; keep both under a new parent cluster and name it.
PARENT MERGE: A and B are the same concept at group level; their subclusters move directly under one parent.
LEAF MERGE: A and B hold the same kind of entity; all of their entities form one cluster.
A INCLUDES B: B is a subcluster of A; the name should describe the entities of both.
B INCLUDES A: A is a subcluster of B; the name should describe the entities of both.

Output Format:
Action: <NO UPDATE | PARENT MERGE | LEAF MERGE | A INCLUDES B | B INCLUDES A>
Name: <name of the resulting cluster>)";

std::string bullet_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += "- " + items[i];
    }
    return out;
}

std::string cluster_section(const char* label, const ClusterView& v) {
    std::string out = std::string("[Cluster ") + label + "]\n";
    out += "Name: " + v.name + "\n";
    out += std::string("Type: ") + (v.is_leaf ? "leaf" : "internal") + "\n";
    if (!v.is_leaf) {
        out += "Subclusters:\n" + bullet_list(v.child_names) + "\n";
    }
    out += "Entities:\n" + bullet_list(v.entities);
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// Bullet items following the line equal to `heading`, stopping at the first
// non-bullet line.
std::vector<std::string> bullets_after(const std::vector<std::string_view>& lines,
                                       std::size_t from, std::string_view heading,
                                       std::size_t* end = nullptr) {
    std::vector<std::string> out;
    std::size_t i = from;
    while (i < lines.size() && lines[i] != heading) {
        ++i;
    }
    if (i == lines.size()) {
        throw FormatError("prompt has no '" + std::string(heading) + "' section");
    }
    for (++i; i < lines.size() && starts_with(lines[i], "- "); ++i) {
        out.emplace_back(lines[i].substr(2));
    }
    if (end) {
        *end = i;
    }
    return out;
}

std::string value_after(const std::vector<std::string_view>& lines, std::size_t from,
                        std::string_view key) {
    for (std::size_t i = from; i < lines.size(); ++i) {
        if (starts_with(lines[i], key)) {
            return std::string(lines[i].substr(key.size()));
        }
    }
    throw FormatError("prompt has no '" + std::string(key) + "' line");
}

ClusterView parse_cluster_section(const std::vector<std::string_view>& lines, std::size_t from) {
    ClusterView v;
    v.name = value_after(lines, from, "Name: ");
    v.is_leaf = value_after(lines, from, "Type: ") == "leaf";
    std::size_t i = from;
    if (!v.is_leaf) {
        v.child_names = bullets_after(lines, from, "Subclusters:", &i);
    }
    v.entities = bullets_after(lines, i, "Entities:");
    return v;
}

}  // namespace

Kind kind_of(std::string_view prompt) {
    if (starts_with(prompt, kDescribeHeader)) return Kind::describe;
    if (starts_with(prompt, kNameHeader)) return Kind::name;
    if (starts_with(prompt, kSplitHeader)) return Kind::split;
    if (starts_with(prompt, kRefineHeader)) return Kind::refine;
    return Kind::unknown;
}

std::string_view describe_template() { return kDescribe; }
std::string_view name_template() { return kName; }
std::string_view split_template() { return kSplit; }
std::string_view refine_template() { return kRefine; }

std::string render(std::string_view tmpl,
                   const std::vector<std::pair<std::string, std::string>>& values) {
    std::map<std::string, std::string, std::less<>> lookup(values.begin(), values.end());
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out += tmpl.substr(pos);
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            throw FormatError("unterminated placeholder in template");
        }
        out += tmpl.substr(pos, open - pos);
        const auto key = tmpl.substr(open + 2, close - open - 2);
        auto it = lookup.find(key);
        if (it == lookup.end()) {
            throw FormatError("template placeholder '" + std::string(key) + "' has no value");
        }
        out += it->second;
        pos = close + 2;
    }
    return out;
}

std::string render_describe(const std::string& entity, const std::optional<std::string>& hint) {
    std::string hint_text;
    if (hint && !hint->empty()) {
        hint_text = "Use this existing description as a hint and restate it in the format above: " +
                    *hint + "\n";
    }
    return render(kDescribe, {{"entity", entity}, {"hint", hint_text}});
}

std::string render_name(const std::vector<std::string>& entities) {
    return render(kName, {{"entities", bullet_list(entities)}});
}

std::string render_split(const std::string& cluster_name, const std::vector<std::string>& entities) {
    return render(kSplit, {{"name", cluster_name}, {"entities", bullet_list(entities)}});
}

std::string render_refine(const ClusterView& a, const ClusterView& b) {
    return render(kRefine,
                  {{"cluster_a", cluster_section("A", a)}, {"cluster_b", cluster_section("B", b)}});
}

std::string with_violation(const std::string& prompt, const std::string& violation) {
    return prompt + "\n\nYour previous answer was rejected: " + violation +
           "\nAnswer again and follow the Output Format exactly.";
}

std::string parse_describe_prompt(std::string_view prompt) {
    const auto lines = lines_of(prompt);
    return value_after(lines, 0, "Entity: ");
}

std::vector<std::string> parse_entity_list_prompt(std::string_view prompt) {
    return bullets_after(lines_of(prompt), 0, "Entities:");
}

std::string parse_split_prompt_name(std::string_view prompt) {
    return value_after(lines_of(prompt), 0, "Cluster name: ");
}

RefineQuery parse_refine_prompt(std::string_view prompt) {
    const auto lines = lines_of(prompt);
    std::size_t a = 0;
    while (a < lines.size() && lines[a] != "[Cluster A]") ++a;
    std::size_t b = a;
    while (b < lines.size() && lines[b] != "[Cluster B]") ++b;
    if (b >= lines.size()) {
        throw FormatError("refine prompt lacks cluster sections");
    }
    return {parse_cluster_section(lines, a), parse_cluster_section(lines, b)};
}

}  // namespace kgfit::prompts
