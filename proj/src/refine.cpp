#include "kgfit/refine.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include "kgfit/error.hpp"
#include "kgfit/prompts.hpp"

namespace kgfit {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

bool starts_with(const std::string& s, std::string_view p) { return s.compare(0, p.size(), p) == 0; }

// Runs `prompt` through the client until `parse` accepts the answer. Client
// failures propagate; schema failures are retried with the violation
// appended and finally reported as nullopt.
template <class Parse>
auto ask(ChatClient& client, const std::string& prompt, int max_retries, Parse parse,
         RefineReport* report, const std::string& what)
    -> std::optional<decltype(parse(std::string()))> {
    std::string current = prompt;
    std::string violation;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        if (report) {
            ++report->calls;
        }
        const std::string response = client.complete(current);
        try {
            return parse(response);
        } catch (const FormatError& e) {
            violation = e.what();
            current = prompts::with_violation(prompt, violation);
        }
    }
    if (report) {
        report->warnings.push_back(what + ": " + violation);
    }
    return std::nullopt;
}

std::string display_name(const HierarchyNode& n) { return n.name ? *n.name : "(unnamed)"; }

std::vector<EntityId> entities_under(const HierarchyTree& tree, NodeId id) {
    std::vector<EntityId> out;
    std::vector<NodeId> stack{id};
    while (!stack.empty()) {
        const NodeId cur = stack.back();
        stack.pop_back();
        const auto& n = tree.node(cur);
        out.insert(out.end(), n.entities.begin(), n.entities.end());
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
            stack.push_back(*it);
        }
    }
    return out;
}

std::vector<std::string> names_of(const std::vector<EntityId>& ids, const NameTable& entities) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (EntityId e : ids) {
        out.push_back(entities.name(e));
    }
    return out;
}

}  // namespace

std::string parse_description(const std::string& response) {
    auto text = trim(response);
    if (text.empty()) {
        throw FormatError("the description was empty");
    }
    return text;
}

std::string parse_name_response(const std::string& response) {
    for (const auto& raw : split_lines(response)) {
        const auto line = trim(raw);
        if (starts_with(line, "Name:")) {
            auto name = trim(std::string_view(line).substr(5));
            if (name.empty()) {
                throw FormatError("the Name line was empty");
            }
            return name;
        }
    }
    throw FormatError("no line of the form 'Name: <cluster name>'");
}

std::vector<SplitGroup> parse_split_response(const std::string& response,
                                             const std::vector<std::string>& entities) {
    std::vector<SplitGroup> groups;
    for (const auto& raw : split_lines(response)) {
        const auto line = trim(raw);
        if (line.empty() || starts_with(line, "```")) {
            continue;
        }
        if (starts_with(line, "##")) {
            auto name = trim(std::string_view(line).substr(2));
            if (name.empty()) {
                throw FormatError("a subcluster heading has no name");
            }
            groups.push_back({std::move(name), {}});
        } else if (starts_with(line, "-")) {
            if (groups.empty()) {
                throw FormatError("entity listed before any '## <subcluster name>' heading");
            }
            groups.back().entities.push_back(trim(std::string_view(line).substr(1)));
        } else {
            throw FormatError("unexpected line '" + line + "'");
        }
    }
    if (groups.empty() || groups.size() > 5) {
        throw FormatError("expected between 1 and 5 subclusters, got " + std::to_string(groups.size()));
    }
    std::multiset<std::string> expected;
    for (const auto& e : entities) {
        expected.insert(trim(e));
    }
    std::multiset<std::string> got;
    for (const auto& g : groups) {
        if (g.entities.empty()) {
            throw FormatError("subcluster '" + g.name + "' has no entities");
        }
        got.insert(g.entities.begin(), g.entities.end());
    }
    if (got != expected) {
        std::vector<std::string> missing;
        std::vector<std::string> extra;
        std::set_difference(expected.begin(), expected.end(), got.begin(), got.end(),
                            std::back_inserter(missing));
        std::set_difference(got.begin(), got.end(), expected.begin(), expected.end(),
                            std::back_inserter(extra));
        std::string msg = "the subclusters must contain every given entity exactly once";
        if (!missing.empty()) {
            msg += "; missing: " + missing.front();
        }
        if (!extra.empty()) {
            msg += "; unknown or repeated: " + extra.front();
        }
        throw FormatError(msg);
    }
    return groups;
}

RefineAction parse_refine_response(const std::string& response) {
    static const std::map<std::string, RefineTag> kTags = {
        {"NO UPDATE", RefineTag::no_update},
        {"PARENT MERGE", RefineTag::parent_merge},
        {"LEAF MERGE", RefineTag::leaf_merge},
        {"A INCLUDES B", RefineTag::left_includes_right},
        {"B INCLUDES A", RefineTag::right_includes_left},
    };
    std::optional<RefineTag> tag;
    std::string name;
    for (const auto& raw : split_lines(response)) {
        const auto line = trim(raw);
        if (starts_with(line, "Action:")) {
            auto value = trim(std::string_view(line).substr(7));
            std::transform(value.begin(), value.end(), value.begin(),
                           [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
            auto it = kTags.find(value);
            if (it == kTags.end()) {
                throw FormatError("unknown action '" + value + "'");
            }
            tag = it->second;
        } else if (starts_with(line, "Name:")) {
            name = trim(std::string_view(line).substr(5));
        }
    }
    if (!tag) {
        throw FormatError("no line of the form 'Action: <option>'");
    }
    if (*tag != RefineTag::no_update && name.empty()) {
        throw FormatError("merge and include actions need a nonempty 'Name:' line");
    }
    return {*tag, name};
}

std::string describe_entity(const std::string& entity, const std::optional<std::string>& hint,
                            ChatClient& client, int max_retries) {
    RefineReport report;
    auto out = ask(client, prompts::render_describe(entity, hint), max_retries, parse_description,
                   &report, "describe " + entity);
    if (!out) {
        throw FormatError("no usable description for '" + entity + "': " + report.warnings.back());
    }
    return *out;
}

HierarchyTree split_clusters(const HierarchyTree& input, const NameTable& entities, ChatClient& client,
                             const RefineOptions& options, RefineReport* report) {
    if (input.state != TreeState::seed) {
        throw InvariantError("split_clusters expects a seed hierarchy");
    }
    HierarchyTree tree = input;

    std::function<void(NodeId)> split_leaf = [&](NodeId id) {
        if (tree.node(id).entities.size() < options.min_entities_in_leaf) {
            return;
        }
        const auto members = tree.node(id).entities;
        const auto names = names_of(members, entities);
        if (!tree.node(id).name) {
            auto name = ask(client, prompts::render_name(names), options.max_retries,
                            parse_name_response, report, "name cluster " + names.front());
            tree.node(id).name = name ? *name : "Cluster of " + names.front();
        }
        auto groups = ask(
            client, prompts::render_split(*tree.node(id).name, names), options.max_retries,
            [&](const std::string& r) { return parse_split_response(r, names); }, report,
            "split cluster " + *tree.node(id).name);
        if (!groups || groups->size() == 1) {
            return;
        }
        std::map<std::string, EntityId> by_name;
        for (std::size_t i = 0; i < members.size(); ++i) {
            by_name[trim(names[i])] = members[i];
        }
        std::vector<NodeId> kids;
        for (auto& g : *groups) {
            HierarchyNode leaf;
            leaf.name = g.name;
            for (const auto& e : g.entities) {
                leaf.entities.push_back(by_name.at(e));
            }
            kids.push_back(static_cast<NodeId>(tree.nodes.size()));
            tree.nodes.push_back(std::move(leaf));
        }
        tree.node(id).entities.clear();
        tree.node(id).children = kids;
        for (NodeId k : kids) {
            split_leaf(k);
        }
    };

    for (NodeId leaf : tree.leaves()) {
        split_leaf(leaf);
    }
    tree = tree.canonical();
    tree.state = TreeState::split;
    tree.validate(entities.size());
    return tree;
}

HierarchyTree refine_bottom_up(const HierarchyTree& input, const NameTable& entities,
                               ChatClient& client, const RefineOptions& options,
                               RefineReport* report) {
    if (input.state != TreeState::split) {
        throw InvariantError("refine_bottom_up expects a split hierarchy");
    }
    HierarchyTree tree = input;
    auto order = tree.preorder();
    std::reverse(order.begin(), order.end());  // children before parents

    auto view = [&](NodeId id) {
        const auto& n = tree.node(id);
        prompts::ClusterView v;
        v.name = display_name(n);
        v.is_leaf = n.is_leaf();
        for (NodeId c : n.children) {
            v.child_names.push_back(display_name(tree.node(c)));
        }
        v.entities = names_of(entities_under(tree, id), entities);
        return v;
    };
    auto kids = [&](NodeId id) {
        const auto& n = tree.node(id);
        return n.is_leaf() ? std::vector<NodeId>{id} : n.children;
    };

    for (NodeId id : order) {
        if (tree.node(id).is_leaf()) {
            const auto names = names_of(tree.node(id).entities, entities);
            auto name = ask(client, prompts::render_name(names), options.max_retries,
                            parse_name_response, report, "name cluster " + names.front());
            if (name) {
                tree.node(id).name = *name;
            }
            continue;
        }
        if (tree.node(id).children.size() != 2) {
            continue;
        }
        const NodeId left = tree.node(id).children[0];
        const NodeId right = tree.node(id).children[1];
        auto action = ask(client, prompts::render_refine(view(left), view(right)),
                          options.max_retries, parse_refine_response, report,
                          "refine " + display_name(tree.node(left)) + " / " +
                              display_name(tree.node(right)));
        if (!action) {
            continue;
        }
        auto& star = tree.node(id);
        switch (action->tag) {
            case RefineTag::no_update:
                break;
            case RefineTag::parent_merge: {
                auto merged = kids(left);
                const auto r = kids(right);
                merged.insert(merged.end(), r.begin(), r.end());
                star.children = merged;
                break;
            }
            case RefineTag::leaf_merge: {
                auto all = entities_under(tree, left);
                const auto r = entities_under(tree, right);
                all.insert(all.end(), r.begin(), r.end());
                star.children.clear();
                star.entities = all;
                break;
            }
            case RefineTag::left_includes_right: {
                auto merged = kids(left);
                merged.push_back(right);
                star.children = merged;
                break;
            }
            case RefineTag::right_includes_left: {
                std::vector<NodeId> merged{left};
                const auto r = kids(right);
                merged.insert(merged.end(), r.begin(), r.end());
                star.children = merged;
                break;
            }
        }
        if (!action->name.empty()) {
            star.name = action->name;
        }
    }
    tree = tree.canonical();
    tree.state = TreeState::refined;
    tree.validate(entities.size());
    return tree;
}

HierarchyStats stats(const HierarchyTree& tree) {
    HierarchyStats s;
    const auto order = tree.preorder();
    const auto depth = tree.depths();
    s.nodes = order.size();
    auto acc = [](MinMaxAvg& m, double v, std::size_t count) {
        if (count == 0) {
            m.min = m.max = v;
        } else {
            m.min = std::min(m.min, v);
            m.max = std::max(m.max, v);
        }
        m.avg += v;
    };
    std::size_t internal = 0;
    for (NodeId id : order) {
        const auto& n = tree.node(id);
        if (n.is_leaf()) {
            acc(s.entities_per_cluster, static_cast<double>(n.entities.size()), s.clusters);
            acc(s.cluster_depth, depth[id], s.clusters);
            ++s.clusters;
        } else {
            acc(s.branch_factor, static_cast<double>(n.children.size()), internal);
            ++internal;
        }
    }
    if (s.clusters > 0) {
        s.entities_per_cluster.avg /= static_cast<double>(s.clusters);
        s.cluster_depth.avg /= static_cast<double>(s.clusters);
    }
    if (internal > 0) {
        s.branch_factor.avg /= static_cast<double>(internal);
    }
    return s;
}

std::string format_stats(const HierarchyStats& s) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%-22s %10s %10s %10s\n"
                  "%-22s %10zu\n"
                  "%-22s %10zu\n"
                  "%-22s %10.0f %10.0f %10.2f\n"
                  "%-22s %10.0f %10.0f %10.2f\n"
                  "%-22s %10.0f %10.0f %10.2f\n",
                  "statistic", "max", "min", "avg", "clusters", s.clusters, "nodes", s.nodes,
                  "entities per cluster", s.entities_per_cluster.max, s.entities_per_cluster.min,
                  s.entities_per_cluster.avg, "cluster depth", s.cluster_depth.max,
                  s.cluster_depth.min, s.cluster_depth.avg, "branch factor", s.branch_factor.max,
                  s.branch_factor.min, s.branch_factor.avg);
    return buf;
}

}  // namespace kgfit
