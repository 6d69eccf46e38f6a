#include <doctest.h>

#include <cstring>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"
#include "kgfit/text_embed.hpp"
#include "support.hpp"

using namespace kgfit;

namespace {

TextEmbeddingStore store_of(Matrix name, Matrix desc) {
    TextEmbeddingStore s;
    s.name = std::move(name);
    s.desc = std::move(desc);
    return s;
}

}  // namespace

TEST_CASE("enrich concatenates name and description rows") {
    const auto s = store_of(Matrix(1, 2, {1, 0}), Matrix(1, 2, {0, 1}));
    const auto v = enrich(s);
    CHECK(v == Matrix(1, 4, {1, 0, 0, 1}));

    const auto t = store_of(testing::random_matrix(3, 2, 1), testing::random_matrix(3, 2, 2));
    const auto w = enrich(t);
    CHECK(w.rows() == 3);
    CHECK(w.cols() == 4);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(w(i, j) == t.name(i, j));
            CHECK(w(i, 2 + j) == t.desc(i, j));
        }
    }
}

TEST_CASE("enrich rejects zero width and mismatched shapes") {
    CHECK_THROWS_AS(enrich(store_of(Matrix(2, 0), Matrix(2, 0))), DimensionError);
    CHECK_THROWS_AS(enrich(store_of(Matrix(2, 3), Matrix(2, 2))), DimensionError);
    auto bad = store_of(Matrix(1, 2, {1, 0}), Matrix(1, 2, {0, std::nan("")}));
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("slice_init takes prefixes of both halves") {
    const auto s = store_of(Matrix(1, 4, {1, 2, 3, 4}), Matrix(1, 4, {5, 6, 7, 8}));
    CHECK(slice_init(s, 4) == Matrix(1, 4, {1, 2, 5, 6}));
    CHECK(slice_init(s, 8) == enrich(s));
    CHECK_THROWS_AS(slice_init(s, 3), DimensionError);
    CHECK_THROWS_AS(slice_init(s, 10), DimensionError);
    CHECK_THROWS_AS(slice_init(s, 0), DimensionError);
}

TEST_CASE("init_entities mixes random and sliced rows") {
    const auto sliced = testing::random_matrix(5, 6, 3);
    CHECK(init_entities(sliced, 0.0, 1) == sliced);
    CHECK(init_entities(sliced, 0.0, 1) == init_entities(sliced, 0.0, 99));
    CHECK(init_entities(sliced, 0.3, 4) == init_entities(sliced, 0.3, 4));
    CHECK_FALSE(init_entities(sliced, 0.3, 4) == init_entities(sliced, 0.3, 5));
    CHECK(init_entities(sliced, 1.0, 4) == init_entities(testing::random_matrix(5, 6, 8), 1.0, 4));
    CHECK_THROWS_AS(init_entities(sliced, -0.1, 1), ConfigError);
    CHECK_THROWS_AS(init_entities(sliced, 1.1, 1), ConfigError);

    // rho = 0.5 mixes half and half: recover e' from one draw and check the identity
    const auto zeros = Matrix(5, 6);
    const auto random_only = init_entities(zeros, 1.0, 7);
    const auto mixed = init_entities(sliced, 0.5, 7);
    const double bound = 1.0 / std::sqrt(6.0);
    for (std::size_t k = 0; k < mixed.data().size(); ++k) {
        CHECK(std::abs(random_only.data()[k]) <= bound);
        CHECK(mixed.data()[k] == doctest::Approx(0.5 * random_only.data()[k] + 0.5 * sliced.data()[k]).epsilon(1e-12));
    }
}

TEST_CASE("init_entities arithmetic example") {
    // e' = [2, 0] and v' = [0, 2] at rho 0.5 give [1, 1]
    const double rho = 0.5;
    const std::vector<double> e{2, 0}, v{0, 2};
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(rho * e[j] + (1 - rho) * v[j] == 1.0);
    }
}

TEST_CASE("matrix file layout is KGFE v1 little-endian f32") {
    testing::TempDir dir("kgfe");
    const Matrix m(2, 3, {1.0, -2.5, 0.25, 3.0, 4.0, 5.0});
    io::write_matrix(dir / "m.kgfe", m);
    const std::string bytes = io::read_text(dir / "m.kgfe");
    REQUIRE(bytes.size() == 4 + 2 + 8 + 4 + 6 * 4);
    CHECK(bytes.substr(0, 4) == "KGFE");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[5]) == 0);
    CHECK(static_cast<unsigned char>(bytes[6]) == 2);
    CHECK(static_cast<unsigned char>(bytes[14]) == 3);
    float second;
    std::memcpy(&second, bytes.data() + 18 + 4, 4);
    CHECK(second == -2.5f);
    CHECK(io::read_matrix(dir / "m.kgfe") == m);

    io::write_text(dir / "bad.kgfe", "KGFX" + bytes.substr(4));
    CHECK_THROWS_AS(io::read_matrix(dir / "bad.kgfe"), ParseError);
    io::write_text(dir / "short.kgfe", bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(io::read_matrix(dir / "short.kgfe"), ParseError);
}

TEST_CASE("descriptions JSONL round trip and row count check") {
    testing::TempDir dir("desc");
    NameTable names;
    names.intern("alpha");
    names.intern("beta");
    std::map<EntityId, std::string> d{{0, "first"}, {1, "second \"quoted\""}};
    save_descriptions(dir / "d.jsonl", d, names);
    CHECK(load_descriptions(dir / "d.jsonl", names) == d);

    io::write_matrix(dir / "n.kgfe", testing::random_matrix(2, 4, 1));
    io::write_matrix(dir / "e.kgfe", testing::random_matrix(2, 4, 2));
    const auto s = load_text_embeddings(dir / "n.kgfe", dir / "e.kgfe", names, dir / "d.jsonl");
    CHECK(s.descriptions.size() == 2);
    names.intern("gamma");
    CHECK_THROWS_AS(load_text_embeddings(dir / "n.kgfe", dir / "e.kgfe", names), DimensionError);

    io::write_text(dir / "bad.jsonl", "{\"entity\": \"nobody\", \"description\": \"x\"}\n");
    CHECK_THROWS(load_descriptions(dir / "bad.jsonl", names));
}
