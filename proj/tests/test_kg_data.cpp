#include <doctest.h>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"
#include "kgfit/kg_data.hpp"
#include "kgfit/rng.hpp"
#include "support.hpp"

using namespace kgfit;

TEST_CASE("load_triples builds vocab in first-appearance order") {
    Vocab v;
    const auto t = parse_triples("a\tr\tb\nb\tr\tc\n", v, VocabMode::build);
    CHECK(v.entities.names() == std::vector<std::string>{"a", "b", "c"});
    CHECK(v.relations.names() == std::vector<std::string>{"r"});
    REQUIRE(t.size() == 2);
    CHECK(t[0] == Triple{0, 0, 1});
    CHECK(t[1] == Triple{1, 0, 2});
}

TEST_CASE("empty input gives empty vocab and no triples") {
    Vocab v;
    CHECK(parse_triples("", v, VocabMode::build).empty());
    CHECK(v.num_entities() == 0);
    CHECK(v.num_relations() == 0);
}

TEST_CASE("wrong column count is a parse error naming the line") {
    Vocab v;
    try {
        parse_triples("a\tr\n", v, VocabMode::build, "f.tsv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("f.tsv:1") != std::string::npos);
    }
    Vocab w;
    CHECK_THROWS_AS(parse_triples("a\tr\tb\nx\ty\tz\tq\n", w, VocabMode::build), ParseError);
}

TEST_CASE("reuse mode rejects unseen names") {
    Vocab v;
    parse_triples("a\tr\tb\n", v, VocabMode::build);
    CHECK_NOTHROW(parse_triples("b\tr\ta\n", v, VocabMode::reuse));
    CHECK_THROWS_AS(parse_triples("a\tr\tc\n", v, VocabMode::reuse), VocabError);
    CHECK_THROWS_AS(parse_triples("a\ts\tb\n", v, VocabMode::reuse), VocabError);
}

TEST_CASE("duplicates inside a split are rejected") {
    Vocab v;
    CHECK_THROWS_AS(parse_triples("a\tr\tb\na\tr\tb\n", v, VocabMode::build), DatasetError);
}

TEST_CASE("name table round trip") {
    NameTable t;
    for (const char* n : {"x", "y", "z"}) {
        t.intern(n);
    }
    for (std::int32_t i = 0; i < 3; ++i) {
        CHECK(t.at(t.name(i)) == i);
    }
    CHECK(t.intern("y") == 1);
    CHECK_FALSE(t.find("w").has_value());
    CHECK_THROWS_AS(t.at("w"), VocabError);
    CHECK_THROWS_AS(NameTable::from_pairs({{"a", 0}, {"b", 2}}), VocabError);
}

TEST_CASE("filter index: union over splits with set semantics") {
    Dataset ds;
    ds.vocab.entities.intern("e0");
    ds.vocab.entities.intern("e1");
    ds.vocab.entities.intern("e2");
    ds.vocab.relations.intern("r");
    ds.train = {{0, 0, 1}};
    ds.test = {{0, 0, 2}, {0, 0, 1}};
    const auto f = build_filter_index(ds);
    CHECK(f.tails(0, 0) == std::set<EntityId>{1, 2});
    CHECK(f.heads(0, 1) == std::set<EntityId>{0});
    CHECK(f.contains({0, 0, 2}));
    CHECK_FALSE(f.contains({1, 0, 2}));
    CHECK(f.tails(2, 0).empty());

    Dataset empty;
    CHECK(build_filter_index(empty).empty());
}

TEST_CASE("filter index agrees with a linear scan on random datasets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Dataset ds;
        const std::size_t ne = 12, nr = 3;
        for (std::size_t i = 0; i < ne; ++i) ds.vocab.entities.intern("e" + std::to_string(i));
        for (std::size_t i = 0; i < nr; ++i) ds.vocab.relations.intern("r" + std::to_string(i));
        for (auto* split : {&ds.train, &ds.valid, &ds.test}) {
            std::set<Triple> seen;
            for (int k = 0; k < 30; ++k) {
                Triple t{static_cast<EntityId>(uniform_index(rng, ne)), static_cast<RelationId>(uniform_index(rng, nr)),
                         static_cast<EntityId>(uniform_index(rng, ne))};
                if (seen.insert(t).second) split->push_back(t);
            }
        }
        const auto f = build_filter_index(ds);
        const auto known = ds.all_known();
        for (EntityId a = 0; a < static_cast<EntityId>(ne); ++a) {
            for (RelationId r = 0; r < static_cast<RelationId>(nr); ++r) {
                std::set<EntityId> tails, heads;
                for (const auto& t : known) {
                    if (t.head == a && t.rel == r) tails.insert(t.tail);
                    if (t.tail == a && t.rel == r) heads.insert(t.head);
                }
                CHECK(f.tails(a, r) == tails);
                CHECK(f.heads(r, a) == heads);
            }
        }
    }
}

TEST_CASE("dataset save/load round trip keeps ids and is deterministic") {
    testing::TempDir dir("kgdata");
    Dataset ds;
    ds.train = parse_triples("a\tr\tb\nb\ts\tc\n", ds.vocab, VocabMode::build);
    ds.valid = parse_triples("c\tr\ta\n", ds.vocab, VocabMode::build);
    ds.test = parse_triples("a\ts\tc\nd\tr\ta\n", ds.vocab, VocabMode::build);
    save_dataset(ds, dir.path());
    const auto a = load_dataset(dir.path());
    const auto b = load_dataset(dir.path());
    CHECK(a.vocab.entities == ds.vocab.entities);
    CHECK(a.vocab.relations == ds.vocab.relations);
    CHECK(a.train == ds.train);
    CHECK(a.valid == ds.valid);
    CHECK(a.test == ds.test);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
}

TEST_CASE("entity2id sidecar fixes ids") {
    testing::TempDir dir("kgsidecar");
    io::write_text(dir / "train.tsv", "a\tr\tb\n");
    io::write_text(dir / "entity2id.tsv", "b\t0\na\t1\n");
    io::write_text(dir / "relation2id.tsv", "r\t0\n");
    const auto ds = load_dataset(dir.path());
    CHECK(ds.vocab.entities.at("b") == 0);
    CHECK(ds.train[0] == Triple{1, 0, 0});

    io::write_text(dir / "train.tsv", "a\tr\tq\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), VocabError);
}

TEST_CASE("missing training file is an io error") {
    testing::TempDir dir("kgmissing");
    CHECK_THROWS_AS(load_dataset(dir.path()), IoError);
}
