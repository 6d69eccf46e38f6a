#include "kgfit/hier_precompute.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "kgfit/clustering.hpp"
#include "kgfit/error.hpp"
#include "kgfit/io.hpp"

namespace kgfit {

namespace {

std::vector<double> mean_rows(const Matrix& m, const std::vector<EntityId>& rows) {
    std::vector<double> out(m.cols(), 0.0);
    for (EntityId e : rows) {
        const auto r = m.row(static_cast<std::size_t>(e));
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += r[j];
        }
    }
    for (auto& v : out) {
        v /= static_cast<double>(rows.size());
    }
    return out;
}

// Fills every row of `out` with the uniform mean over leaf cluster vectors
// below that node, given cluster vectors already stored at the leaf rows.
void average_up(const std::vector<LeafInfo>& leaves, Matrix& out) {
    Matrix sums(out.rows(), out.cols(), 0.0);
    std::vector<std::size_t> counts(out.rows(), 0);
    for (const auto& leaf : leaves) {
        const auto c = out.row(static_cast<std::size_t>(leaf.node));
        auto add = [&](NodeId node) {
            auto s = sums.row(static_cast<std::size_t>(node));
            for (std::size_t j = 0; j < s.size(); ++j) {
                s[j] += c[j];
            }
            ++counts[static_cast<std::size_t>(node)];
        };
        add(leaf.node);
        for (NodeId p : leaf.parents) {
            add(p);
        }
    }
    for (std::size_t i = 0; i < out.rows(); ++i) {
        if (counts[i] == 0) {
            continue;
        }
        auto o = out.row(i);
        const auto s = sums.row(i);
        for (std::size_t j = 0; j < o.size(); ++j) {
            o[j] = s[j] / static_cast<double>(counts[i]);
        }
    }
}

}  // namespace

NodeVectors cluster_embeddings(const HierarchyTree& tree, const Matrix& embeddings) {
    NodeVectors out;
    for (NodeId id : tree.leaves()) {
        const auto& n = tree.node(id);
        if (n.entities.empty()) {
            throw InvariantError("leaf " + std::to_string(id) + " holds no entities");
        }
        for (EntityId e : n.entities) {
            if (e < 0 || static_cast<std::size_t>(e) >= embeddings.rows()) {
                throw DimensionError("entity id " + std::to_string(e) + " has no embedding row");
            }
        }
        out[id] = mean_rows(embeddings, n.entities);
    }
    return out;
}

NodeVectors parent_embeddings(const HierarchyTree& tree, const NodeVectors& clusters) {
    auto order = tree.preorder();
    std::map<NodeId, std::pair<std::vector<double>, std::size_t>> acc;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& n = tree.node(*it);
        if (n.is_leaf()) {
            acc[*it] = {clusters.at(*it), 1};
            continue;
        }
        std::vector<double> sum;
        std::size_t count = 0;
        for (NodeId c : n.children) {
            const auto& [cs, cc] = acc.at(c);
            if (sum.empty()) {
                sum.assign(cs.size(), 0.0);
            }
            for (std::size_t j = 0; j < cs.size(); ++j) {
                sum[j] += cs[j];
            }
            count += cc;
        }
        acc[*it] = {std::move(sum), count};
    }
    NodeVectors out;
    for (auto& [id, sc] : acc) {
        auto v = sc.first;
        for (auto& x : v) {
            x /= static_cast<double>(sc.second);
        }
        out[id] = std::move(v);
    }
    return out;
}

std::vector<NodeId> neighbor_clusters(const HierarchyTree& tree, NodeId leaf,
                                      const NodeVectors& clusters, std::size_t m,
                                      int ancestor_levels) {
    const auto parent = tree.parents();
    NodeId anc = leaf;
    for (int i = 0; i < ancestor_levels && parent.at(static_cast<std::size_t>(anc)) >= 0; ++i) {
        anc = parent[static_cast<std::size_t>(anc)];
    }
    const auto& self = clusters.at(leaf);
    std::vector<std::pair<double, NodeId>> cand;
    std::vector<NodeId> stack{anc};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        const auto& n = tree.node(id);
        if (n.is_leaf()) {
            if (id != leaf) {
                cand.emplace_back(cosine_distance(self, clusters.at(id)), id);
            }
            continue;
        }
        stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
    std::sort(cand.begin(), cand.end());
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < cand.size() && i < m; ++i) {
        out.push_back(cand[i].second);
    }
    return out;
}

std::vector<double> beta_weights(std::size_t h, double beta0, double phi) {
    if (!(beta0 > 0.0)) {
        throw ConfigError("beta0 must be positive");
    }
    if (!(phi >= 0.0)) {
        throw ConfigError("phi must be nonnegative");
    }
    if (h < 1) {
        throw DomainError("depth must be at least 1");
    }
    std::vector<double> out;
    for (std::size_t j = 1; j < h; ++j) {
        out.push_back(beta0 * std::exp(-phi * static_cast<double>(j)));
    }
    return out;
}

void HierPrecomp::refresh(const Matrix& embeddings) {
    for (const auto& leaf : leaves) {
        const auto c = mean_rows(embeddings, leaf.members);
        std::copy(c.begin(), c.end(), node_vectors.row(static_cast<std::size_t>(leaf.node)).begin());
    }
    average_up(leaves, node_vectors);
}

bool HierPrecomp::operator==(const HierPrecomp& o) const {
    auto same_leaf = [](const LeafInfo& a, const LeafInfo& b) {
        return a.node == b.node && a.members == b.members && a.parents == b.parents &&
               a.neighbors == b.neighbors && a.betas == b.betas;
    };
    return config.m == o.config.m && config.ancestor_levels == o.config.ancestor_levels &&
           config.beta0 == o.config.beta0 && config.phi == o.config.phi && dim == o.dim &&
           leaf_of == o.leaf_of && leaves.size() == o.leaves.size() &&
           std::equal(leaves.begin(), leaves.end(), o.leaves.begin(), same_leaf) &&
           node_vectors == o.node_vectors;
}

HierPrecomp build_precomp(const HierarchyTree& input, const Matrix& embeddings,
                          const PrecompConfig& config) {
    const HierarchyTree tree = input.canonical();
    tree.validate(embeddings.rows());
    beta_weights(1, config.beta0, config.phi);

    HierPrecomp p;
    p.config = config;
    p.dim = embeddings.cols();
    p.leaf_of.assign(embeddings.rows(), -1);
    p.node_vectors = Matrix(tree.nodes.size(), embeddings.cols(), 0.0);

    const auto clusters = cluster_embeddings(tree, embeddings);
    const auto parent = tree.parents();
    for (NodeId id : tree.leaves()) {
        LeafInfo info;
        info.node = id;
        info.members = tree.node(id).entities;
        for (NodeId a = parent[static_cast<std::size_t>(id)]; a >= 0; a = parent[static_cast<std::size_t>(a)]) {
            info.parents.push_back(a);
        }
        info.neighbors = neighbor_clusters(tree, id, clusters, config.m, config.ancestor_levels);
        info.betas = beta_weights(info.depth(), config.beta0, config.phi);
        for (EntityId e : info.members) {
            p.leaf_of[static_cast<std::size_t>(e)] = static_cast<std::int32_t>(p.leaves.size());
        }
        const auto& c = clusters.at(id);
        std::copy(c.begin(), c.end(), p.node_vectors.row(static_cast<std::size_t>(id)).begin());
        p.leaves.push_back(std::move(info));
    }
    average_up(p.leaves, p.node_vectors);
    return p;
}

void save_precomp(const std::filesystem::path& stem, const HierPrecomp& p) {
    nlohmann::ordered_json j;
    j["dim"] = p.dim;
    j["m"] = p.config.m;
    j["ancestor_levels"] = p.config.ancestor_levels;
    j["beta0"] = p.config.beta0;
    j["phi"] = p.config.phi;
    j["leaf_of"] = p.leaf_of;
    auto& leaves = j["leaves"] = nlohmann::ordered_json::array();
    for (const auto& l : p.leaves) {
        nlohmann::ordered_json lj;
        lj["node"] = l.node;
        lj["members"] = l.members;
        lj["parents"] = l.parents;
        lj["neighbors"] = l.neighbors;
        leaves.push_back(std::move(lj));
    }
    auto json_path = stem;
    json_path += ".json";
    auto kgfe_path = stem;
    kgfe_path += ".kgfe";
    io::write_text(json_path, j.dump(1) + "\n");
    io::write_matrix(kgfe_path, p.node_vectors);
}

HierPrecomp load_precomp(const std::filesystem::path& stem) {
    auto json_path = stem;
    json_path += ".json";
    auto kgfe_path = stem;
    kgfe_path += ".kgfe";
    HierPrecomp p;
    try {
        const auto j = nlohmann::json::parse(io::read_text(json_path));
        p.dim = j.at("dim").get<std::size_t>();
        p.config.m = j.at("m").get<std::size_t>();
        p.config.ancestor_levels = j.at("ancestor_levels").get<int>();
        p.config.beta0 = j.at("beta0").get<double>();
        p.config.phi = j.at("phi").get<double>();
        p.leaf_of = j.at("leaf_of").get<std::vector<std::int32_t>>();
        for (const auto& lj : j.at("leaves")) {
            LeafInfo l;
            l.node = lj.at("node").get<NodeId>();
            l.members = lj.at("members").get<std::vector<EntityId>>();
            l.parents = lj.at("parents").get<std::vector<NodeId>>();
            l.neighbors = lj.at("neighbors").get<std::vector<NodeId>>();
            l.betas = beta_weights(l.depth(), p.config.beta0, p.config.phi);
            p.leaves.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(json_path.string() + ": " + e.what());
    }
    // Stored as f32; the in-memory copy is the widened f32 values.
    p.node_vectors = io::read_matrix(kgfe_path);
    if (p.node_vectors.cols() != p.dim) {
        throw DimensionError("precompute sidecar width does not match its index");
    }
    return p;
}

}  // namespace kgfit
