#include <doctest.h>

#include "kgfit/clustering.hpp"
#include "kgfit/error.hpp"
#include "kgfit/fixtures.hpp"
#include "kgfit/io.hpp"
#include "kgfit/kg_data.hpp"
#include "kgfit/text_embed.hpp"
#include "support.hpp"

using namespace kgfit;

TEST_CASE("toy KG shape") {
    const auto toy = generate_toy({});
    CHECK(toy.data.vocab.num_entities() == 64);
    CHECK(toy.data.vocab.num_relations() == 2);
    CHECK(toy.text.name.rows() == 64);
    CHECK(toy.text.name.cols() == 32);
    CHECK(toy.labels.size() == 64);
    CHECK(toy.labels[9] == 1);
    CHECK(toy.data.vocab.entities.name(9) == "c1_e1");
    // 64 ring edges + 7 chain edges, 10% held out per split
    CHECK(toy.data.test.size() == 7);
    CHECK(toy.data.valid.size() == 7);
    CHECK(toy.data.train.size() == 71 - 14);
    for (const auto* split : {&toy.data.valid, &toy.data.test}) {
        for (const auto& t : *split) CHECK(toy.data.vocab.relations.name(t.rel) == "intra");
    }
    CHECK_NOTHROW(toy.data.validate());
}

TEST_CASE("toy_kg14 is two clusters of seven") {
    const auto toy = toy_kg14();
    CHECK(toy.data.vocab.num_entities() == 14);
    CHECK(toy.data.test.size() == 3);
    CHECK(toy.data.valid.size() == 3);
    CHECK(toy.data.train.size() == 15 - 6);
    CHECK(toy.text.descriptions.size() == 14);
}

TEST_CASE("toy generation is deterministic in the seed") {
    const auto a = toy_kg14(3), b = toy_kg14(3), c = toy_kg14(4);
    CHECK(a.data.train == b.data.train);
    CHECK(a.text.name == b.text.name);
    CHECK_FALSE(a.text.name == c.text.name);
}

TEST_CASE("toy spec validation and JSON") {
    const auto s = toy_spec_from_json(R"({"clusters": 3, "per_cluster": 5, "seed": 11})");
    CHECK(s.clusters == 3);
    CHECK(s.per_cluster == 5);
    CHECK(s.seed == 11);
    CHECK(s.text_dim == 32);
    CHECK_THROWS_AS(toy_spec_from_json(R"({"clusters": 1})"), ConfigError);
    CHECK_THROWS_AS(toy_spec_from_json(R"({"colour": 1})"), ConfigError);
    CHECK_THROWS_AS(toy_spec_from_json(R"({"holdout": 1.0})"), ConfigError);
    ToyKGSpec big;
    big.holdout = 0.45;
    CHECK_THROWS_AS(generate_toy(big), ConfigError);
}

TEST_CASE("saved toy loads back as a dataset with text") {
    testing::TempDir dir("toy");
    const auto toy = toy_kg14();
    save_toy(toy, dir.path());
    const auto ds = load_dataset(dir.path());
    CHECK(ds.train == toy.data.train);
    CHECK(ds.vocab.entities == toy.data.vocab.entities);
    const auto store = load_text_embeddings(dir / "name.kgfe", dir / "desc.kgfe", ds.vocab.entities,
                                            dir / "descriptions.jsonl");
    CHECK(store.descriptions == toy.text.descriptions);
    CHECK(store.name.rows() == 14);
    CHECK(io::read_text(dir / "labels.tsv").substr(0, 8) == "c0_e0\t0\n");
}

TEST_CASE("adjusted Rand index") {
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 2, 2}) == 1.0);
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(adjusted_rand_index({0}, {0, 1}), DimensionError);
}

TEST_CASE("zero noise puts every cluster member on its centroid") {
    ToyKGSpec spec;
    spec.noise = 0;
    spec.clusters = 3;
    spec.per_cluster = 4;
    const auto toy = generate_toy(spec);
    const auto v = enrich(toy.text);
    for (std::size_t i = 0; i < 12; ++i) {
        for (std::size_t j = 0; j < 12; ++j) {
            if (toy.labels[i] == toy.labels[j]) CHECK(cosine_distance(v.row(i), v.row(j)) == doctest::Approx(0).epsilon(1e-12));
        }
    }
}
