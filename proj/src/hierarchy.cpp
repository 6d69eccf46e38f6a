#include "kgfit/hierarchy.hpp"

#include <algorithm>
#include <json.hpp>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"

namespace kgfit {

std::vector<NodeId> HierarchyTree::preorder() const {
    std::vector<NodeId> out;
    if (nodes.empty()) {
        return out;
    }
    std::vector<char> seen(nodes.size(), 0);
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) {
            throw InvariantError("child id " + std::to_string(id) + " out of range");
        }
        if (seen[id]) {
            throw InvariantError("node " + std::to_string(id) + " reachable twice (cycle or shared child)");
        }
        seen[id] = 1;
        out.push_back(id);
        const auto& ch = nodes[id].children;
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
            stack.push_back(*it);
        }
    }
    return out;
}

std::vector<NodeId> HierarchyTree::leaves() const {
    std::vector<NodeId> out;
    for (NodeId id : preorder()) {
        if (nodes[id].is_leaf()) {
            out.push_back(id);
        }
    }
    return out;
}

std::vector<NodeId> HierarchyTree::parents() const {
    std::vector<NodeId> parent(nodes.size(), -1);
    for (NodeId id : preorder()) {
        for (NodeId c : nodes[id].children) {
            parent[c] = id;
        }
    }
    return parent;
}

std::vector<std::int32_t> HierarchyTree::depths() const {
    std::vector<std::int32_t> depth(nodes.size(), -1);
    for (NodeId id : preorder()) {
        if (id == root) {
            depth[id] = 0;
        }
        for (NodeId c : nodes[id].children) {
            depth[c] = depth[id] + 1;
        }
    }
    return depth;
}

HierarchyTree HierarchyTree::canonical() const {
    const auto order = preorder();
    std::vector<NodeId> remap(nodes.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        remap[order[i]] = static_cast<NodeId>(i);
    }
    HierarchyTree out;
    out.state = state;
    out.root = 0;
    out.nodes.reserve(order.size());
    for (NodeId id : order) {
        HierarchyNode n = nodes[id];
        for (auto& c : n.children) {
            c = remap[c];
        }
        out.nodes.push_back(std::move(n));
    }
    return out;
}

void HierarchyTree::validate(std::size_t num_entities) const {
    if (nodes.empty()) {
        throw InvariantError("hierarchy has no nodes");
    }
    std::vector<char> covered(num_entities, 0);
    for (NodeId id : preorder()) {
        const auto& n = nodes[id];
        if (n.is_leaf()) {
            if (n.entities.empty()) {
                throw InvariantError("leaf " + std::to_string(id) + " holds no entities");
            }
            for (EntityId e : n.entities) {
                if (e < 0 || static_cast<std::size_t>(e) >= num_entities) {
                    throw InvariantError("entity id " + std::to_string(e) + " out of range");
                }
                if (covered[e]) {
                    throw InvariantError("entity " + std::to_string(e) + " appears in two leaves");
                }
                covered[e] = 1;
            }
        } else if (!n.entities.empty()) {
            throw InvariantError("internal node " + std::to_string(id) + " holds entities");
        }
    }
    if (std::find(covered.begin(), covered.end(), 0) != covered.end()) {
        throw InvariantError("some entities are not covered by any leaf");
    }
}

std::vector<EntityId> HierarchyTree::leaf_entities() const {
    std::vector<EntityId> out;
    for (NodeId id : leaves()) {
        out.insert(out.end(), nodes[id].entities.begin(), nodes[id].entities.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

HierarchyTree build_seed(const Dendrogram& dendrogram, const ClusterLabels& labels) {
    const std::size_t n = dendrogram.num_leaves;
    if (n == 0 || labels.labels.size() != n || dendrogram.merges.size() + 1 != n) {
        throw InvariantError("labels do not match the dendrogram");
    }
    std::int32_t k = 0;
    for (auto l : labels.labels) {
        if (l < 0) {
            throw InvariantError("negative cluster label");
        }
        k = std::max(k, l + 1);
    }
    std::vector<std::vector<EntityId>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        members[labels.labels[i]].push_back(static_cast<EntityId>(i));
    }
    for (const auto& m : members) {
        if (m.empty()) {
            throw InvariantError("cluster labels are not dense");
        }
    }

    const std::size_t total = n + dendrogram.merges.size();
    std::vector<std::pair<std::int32_t, std::int32_t>> kids(total, {-1, -1});
    for (const auto& m : dendrogram.merges) {
        kids[m.node] = {m.a, m.b};
    }
    const auto dendro_root = static_cast<std::int32_t>(total - 1);

    // Top-down pass: the first leaf met for each cluster carries it.
    std::vector<char> carrier(n, 0);
    std::vector<char> visited(static_cast<std::size_t>(k), 0);
    std::vector<std::int32_t> stack{dendro_root};
    while (!stack.empty()) {
        const auto id = stack.back();
        stack.pop_back();
        if (static_cast<std::size_t>(id) < n) {
            const auto c = labels.labels[id];
            if (!visited[c]) {
                visited[c] = 1;
                carrier[id] = 1;
            }
            continue;
        }
        stack.push_back(kids[id].second);
        stack.push_back(kids[id].first);
    }

    // Bottom-up pruning in merge order (children always precede parents).
    HierarchyTree tree;
    tree.state = TreeState::seed;
    std::vector<NodeId> result(total, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (carrier[i]) {
            HierarchyNode leaf;
            leaf.entities = members[labels.labels[i]];
            result[i] = static_cast<NodeId>(tree.nodes.size());
            tree.nodes.push_back(std::move(leaf));
        }
    }
    for (const auto& m : dendrogram.merges) {
        const NodeId ra = result[m.a];
        const NodeId rb = result[m.b];
        if (ra >= 0 && rb >= 0) {
            HierarchyNode inner;
            inner.children = {ra, rb};
            result[m.node] = static_cast<NodeId>(tree.nodes.size());
            tree.nodes.push_back(std::move(inner));
        } else {
            result[m.node] = ra >= 0 ? ra : rb;
        }
    }
    tree.root = result[dendro_root];
    tree = tree.canonical();
    tree.validate(n);
    return tree;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson node_to_json(const HierarchyTree& tree, NodeId id, const NameTable& entities) {
    const auto& n = tree.node(id);
    ojson j;
    j["id"] = id;
    j["name"] = n.name ? ojson(*n.name) : ojson(nullptr);
    if (n.is_leaf()) {
        ojson names = ojson::array();
        for (EntityId e : n.entities) {
            names.push_back(entities.name(e));
        }
        j["entities"] = std::move(names);
    } else {
        j["entities"] = nullptr;
    }
    j["children"] = ojson::array();
    for (NodeId c : n.children) {
        j["children"].push_back(node_to_json(tree, c, entities));
    }
    return j;
}

NodeId node_from_json(const nlohmann::json& j, HierarchyTree& tree, const NameTable& entities) {
    if (!j.is_object()) {
        throw ParseError("hierarchy node must be a JSON object");
    }
    const auto id = static_cast<NodeId>(tree.nodes.size());
    tree.nodes.emplace_back();
    HierarchyNode n;
    if (j.contains("name") && !j["name"].is_null()) {
        n.name = j["name"].get<std::string>();
    }
    if (j.contains("entities") && !j["entities"].is_null()) {
        for (const auto& e : j["entities"]) {
            n.entities.push_back(entities.at(e.get<std::string>()));
        }
    }
    if (j.contains("children")) {
        for (const auto& c : j["children"]) {
            n.children.push_back(node_from_json(c, tree, entities));
        }
    }
    tree.nodes[id] = std::move(n);
    return id;
}

}  // namespace

std::string tree_to_json(const HierarchyTree& tree, const NameTable& entities, int indent) {
    return node_to_json(tree, tree.root, entities).dump(indent) + "\n";
}

HierarchyTree tree_from_json(const std::string& text, const NameTable& entities, TreeState state) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("hierarchy JSON: ") + e.what());
    }
    HierarchyTree tree;
    tree.state = state;
    try {
        tree.root = node_from_json(j, tree, entities);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("hierarchy JSON: ") + e.what());
    }
    tree = tree.canonical();
    tree.validate(entities.size());
    return tree;
}

void save_tree(const std::filesystem::path& path, const HierarchyTree& tree,
               const NameTable& entities) {
    io::write_text(path, tree_to_json(tree, entities));
}

HierarchyTree load_tree(const std::filesystem::path& path, const NameTable& entities,
                        TreeState state) {
    return tree_from_json(io::read_text(path), entities, state);
}

bool same_topology(const HierarchyTree& a, const HierarchyTree& b) {
    const auto ca = a.canonical();
    const auto cb = b.canonical();
    if (ca.nodes.size() != cb.nodes.size()) {
        return false;
    }
    for (std::size_t i = 0; i < ca.nodes.size(); ++i) {
        if (ca.nodes[i].children != cb.nodes[i].children ||
            ca.nodes[i].entities != cb.nodes[i].entities) {
            return false;
        }
    }
    return true;
}

}  // namespace kgfit
