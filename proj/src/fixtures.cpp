#include "kgfit/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"
#include "kgfit/rng.hpp"

namespace kgfit {

void ToyKGSpec::validate() const {
    if (clusters < 2 || per_cluster < 2) {
        throw ConfigError("toy KG needs at least 2 clusters of at least 2 entities");
    }
    if (text_dim == 0) {
        throw ConfigError("text_dim must be positive");
    }
    if (!(noise >= 0.0)) {
        throw ConfigError("noise must be nonnegative");
    }
    if (!(holdout > 0.0 && holdout < 1.0)) {
        throw ConfigError("holdout must lie in (0, 1)");
    }
}

ToyKG generate_toy(const ToyKGSpec& spec) {
    spec.validate();
    const std::size_t k = spec.clusters;
    const std::size_t m = spec.per_cluster;
    const std::size_t d = spec.text_dim;
    ToyKG toy;
    auto& vocab = toy.data.vocab;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            vocab.entities.intern("c" + std::to_string(i) + "_e" + std::to_string(j));
            toy.labels.push_back(static_cast<std::int32_t>(i));
        }
    }
    const auto intra = vocab.relations.intern("intra");
    const auto cross = vocab.relations.intern("cross");
    auto id = [&](std::size_t i, std::size_t j) { return static_cast<EntityId>(i * m + j); };

    Rng text_rng = make_rng(spec.seed, "toy-text");
    Matrix name_c(k, d), desc_c(k, d);
    for (auto* c : {&name_c, &desc_c}) {
        for (auto& x : c->data()) {
            x = standard_normal(text_rng);
        }
    }
    toy.text.name = Matrix(k * m, d);
    toy.text.desc = Matrix(k * m, d);
    for (std::size_t e = 0; e < k * m; ++e) {
        const std::size_t c = e / m;
        for (std::size_t j = 0; j < d; ++j) {
            toy.text.name(e, j) = name_c(c, j) + spec.noise * standard_normal(text_rng);
        }
        for (std::size_t j = 0; j < d; ++j) {
            toy.text.desc(e, j) = desc_c(c, j) + spec.noise * standard_normal(text_rng);
        }
        toy.text.descriptions[static_cast<EntityId>(e)] =
            vocab.entities.name(static_cast<EntityId>(e)) + " is a member of group " + std::to_string(c);
    }

    std::vector<Triple> ring;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            ring.push_back({id(i, j), intra, id(i, (j + 1) % m)});
        }
    }
    std::vector<Triple> chain;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        chain.push_back({id(i, 0), cross, id(i + 1, 0)});
    }
    const std::size_t total = ring.size() + chain.size();
    const auto held = static_cast<std::size_t>(std::llround(spec.holdout * static_cast<double>(total)));
    if (2 * held >= ring.size()) {
        throw ConfigError("holdout too large for the ring edges of this toy KG");
    }

    Rng split_rng = make_rng(spec.seed, "toy-split");
    std::vector<std::size_t> order(ring.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(split_rng, i)]);
    }
    std::vector<int> bucket(ring.size(), 0);  // 0 train, 1 valid, 2 test
    for (std::size_t i = 0; i < held; ++i) {
        bucket[order[i]] = 2;
        bucket[order[held + i]] = 1;
    }
    for (std::size_t i = 0; i < ring.size(); ++i) {
        (bucket[i] == 0 ? toy.data.train : bucket[i] == 1 ? toy.data.valid : toy.data.test).push_back(ring[i]);
    }
    toy.data.train.insert(toy.data.train.end(), chain.begin(), chain.end());
    return toy;
}

ToyKG toy_kg14(std::uint64_t seed) {
    ToyKGSpec spec;
    spec.clusters = 2;
    spec.per_cluster = 7;
    spec.holdout = 0.2;
    spec.seed = seed;
    return generate_toy(spec);
}

ToyKGSpec toy_spec_from_json(const std::string& text) {
    ToyKGSpec s;
    try {
        const auto j = nlohmann::json::parse(text);
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& key = it.key();
            if (key == "clusters") s.clusters = it->get<std::size_t>();
            else if (key == "per_cluster") s.per_cluster = it->get<std::size_t>();
            else if (key == "text_dim") s.text_dim = it->get<std::size_t>();
            else if (key == "noise") s.noise = it->get<double>();
            else if (key == "holdout") s.holdout = it->get<double>();
            else if (key == "seed") s.seed = it->get<std::uint64_t>();
            else throw ConfigError("unknown toy spec key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("toy spec: ") + e.what());
    }
    s.validate();
    return s;
}

void save_toy(const ToyKG& toy, const std::filesystem::path& dir) {
    save_dataset(toy.data, dir);
    io::write_matrix(dir / "name.kgfe", toy.text.name);
    io::write_matrix(dir / "desc.kgfe", toy.text.desc);
    save_descriptions(dir / "descriptions.jsonl", toy.text.descriptions, toy.data.vocab.entities);
    std::string labels;
    for (std::size_t e = 0; e < toy.labels.size(); ++e) {
        labels += toy.data.vocab.entities.name(static_cast<EntityId>(e)) + "\t" +
                  std::to_string(toy.labels[e]) + "\n";
    }
    io::write_text(dir / "labels.tsv", labels);
}

double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
    if (a.size() != b.size()) {
        throw DimensionError("labelings have different lengths");
    }
    if (a.size() < 2) {
        return 1.0;
    }
    auto choose2 = [](double x) { return x * (x - 1) / 2; };
    std::map<std::pair<std::int32_t, std::int32_t>, double> joint;
    std::map<std::int32_t, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    double index = 0, sa = 0, sb = 0;
    for (const auto& [_, c] : joint) index += choose2(c);
    for (const auto& [_, c] : ra) sa += choose2(c);
    for (const auto& [_, c] : rb) sb += choose2(c);
    const double expected = sa * sb / choose2(static_cast<double>(a.size()));
    const double max_index = (sa + sb) / 2;
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

}  // namespace kgfit
