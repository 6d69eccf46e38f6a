#include <doctest.h>

#include <numbers>

#include "kgfit/error.hpp"
#include "kgfit/kge_models.hpp"
#include "support.hpp"

using namespace kgfit;

namespace {

using Rows = std::vector<double>;

double s(ModelFamily f, const Rows& h, const Rows& r, const Rows& t, ModelConstants c = {}) {
    return score_rows(f, c, h, r, t);
}

const ModelFamily kAll[] = {ModelFamily::transe,  ModelFamily::distmult, ModelFamily::complex,
                            ModelFamily::protate, ModelFamily::rotate,   ModelFamily::hake};

}  // namespace

TEST_CASE("family names round trip") {
    for (auto f : kAll) CHECK(parse_family(family_name(f)) == f);
    CHECK_THROWS_AS(parse_family("TransE"), ConfigError);
    CHECK(relation_width(ModelFamily::rotate, 8) == 4);
    CHECK(relation_width(ModelFamily::hake, 8) == 9);
    CHECK(relation_width(ModelFamily::complex, 8) == 8);
}

TEST_CASE("score spot values") {
    const double pi = std::numbers::pi;
    CHECK(s(ModelFamily::transe, {0, 0}, {1, 0}, {1, 0}) == 0.0);
    CHECK(s(ModelFamily::transe, {0, 0}, {3, 4}, {0, 0}) == doctest::Approx(-5));
    ModelConstants l1;
    l1.p_norm = 1;
    CHECK(s(ModelFamily::transe, {0, 0}, {3, 4}, {0, 0}, l1) == doctest::Approx(-7));

    CHECK(s(ModelFamily::distmult, {1, 2}, {3, 4}, {5, 6}) == doctest::Approx(63));
    // Re(<h, r, conj t>) with h = 1+2i, r = 3+4i, t = 5+6i
    CHECK(s(ModelFamily::complex, {1, 2}, {3, 4}, {5, 6}) == doctest::Approx(35));

    CHECK(s(ModelFamily::rotate, {1, 0}, {pi / 2}, {0, 1}) == doctest::Approx(0).epsilon(1e-12));
    CHECK(s(ModelFamily::rotate, {1, 0}, {pi / 2}, {0, 0}) == doctest::Approx(-1));

    CHECK(s(ModelFamily::protate, {0, 0}, {pi, 0}, {0, 0}) == doctest::Approx(-2));
    ModelConstants c3;
    c3.modulus = 3;
    CHECK(s(ModelFamily::protate, {0, 0}, {pi, 0}, {0, 0}, c3) == doctest::Approx(-6));

    // phase |sin(pi/2)| = 1 weighted by 0.5, modulus |2*3 - 5| = 1
    CHECK(s(ModelFamily::hake, {0, 2}, {pi, 3, 0.5}, {0, 5}) == doctest::Approx(-1.5));

    CHECK_THROWS_AS(s(ModelFamily::rotate, {1, 0}, {0, 0}, {1, 0}), DimensionError);
    CHECK_THROWS_AS(s(ModelFamily::transe, {1, 0}, {0, 0}, {1}), DimensionError);
}

TEST_CASE("a perfect translation or rotation scores at the maximum") {
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const auto h = testing::random_vector(8, rng);
        const auto r = testing::random_vector(8, rng);
        Rows t(8);
        for (int i = 0; i < 8; ++i) t[i] = h[i] + r[i];
        CHECK(std::abs(s(ModelFamily::transe, h, r, t)) < 1e-12);
        Rows ph(4);
        for (auto& x : ph) x = uniform_unit(rng) * 6.28;
        Rows rt(8);
        for (int i = 0; i < 4; ++i) {
            rt[i] = h[i] * std::cos(ph[i]) - h[4 + i] * std::sin(ph[i]);
            rt[4 + i] = h[i] * std::sin(ph[i]) + h[4 + i] * std::cos(ph[i]);
        }
        CHECK(std::abs(s(ModelFamily::rotate, h, ph, rt)) < 1e-12);
    }
}

TEST_CASE("analytic score gradients match central differences") {
    Rng rng(11);
    for (auto f : kAll) {
        for (int p : {1, 2}) {
            if (p == 1 && f != ModelFamily::transe) continue;
            ModelConstants c;
            c.p_norm = p;
            c.modulus = 1.7;
            double worst = 0;
            for (int k = 0; k < 30; ++k) worst = std::max(worst, testing::score_fd_error(f, c, 8, rng));
            INFO(family_name(f), " p=", p);
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("gradients at a zero residual are zero") {
    Rows g1(2), g2(2), g3(2);
    score_grad_rows(ModelFamily::transe, {}, Rows{1, 1}, Rows{0, 0}, Rows{1, 1}, g1, g2, g3);
    CHECK(g1 == Rows{0, 0});
    ModelConstants l1;
    l1.p_norm = 1;
    score_grad_rows(ModelFamily::transe, l1, Rows{1, 1}, Rows{0, 0}, Rows{1, 1}, g1, g2, g3);
    CHECK(g3 == Rows{0, 0});
}

TEST_CASE("state-level score and score_grad agree with the row functions") {
    ModelState st;
    st.family = ModelFamily::complex;
    st.entities = testing::random_matrix(4, 6, 1);
    st.relations = testing::random_matrix(2, 6, 2);
    st.validate();
    const auto g = score_grad(st, 0, 1, 3);
    CHECK(g.score == score(st, 0, 1, 3));
    CHECK(g.score == score_rows(st.family, st.constants, st.entities.row(0), st.relations.row(1), st.entities.row(3)));
    CHECK(g.grad_h.size() == 6);

    st.relations = testing::random_matrix(2, 5, 2);
    CHECK_THROWS_AS(st.validate(), DimensionError);
}

TEST_CASE("relation initialisation statistics") {
    const auto r = init_relations(ModelFamily::transe, 400, 64, 0.01, 5);
    double sum = 0, sq = 0;
    for (double x : r.data()) {
        sum += x;
        sq += x * x;
    }
    const double nn = static_cast<double>(r.data().size());
    CHECK(std::abs(sum / nn) < 1e-3);
    CHECK(std::sqrt(sq / nn) == doctest::Approx(0.01).epsilon(0.03));
    CHECK(init_relations(ModelFamily::transe, 3, 4, 0.01, 5) == init_relations(ModelFamily::transe, 3, 4, 0.01, 5));

    const auto ph = init_relations(ModelFamily::rotate, 50, 16, 0.01, 2);
    CHECK(ph.cols() == 8);
    for (double x : ph.data()) {
        CHECK(x >= 0);
        CHECK(x < 2 * std::numbers::pi);
    }
    const auto hk = init_relations(ModelFamily::hake, 10, 8, 0.01, 2);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(hk(i, 8) == 1.0);
        CHECK(hk(i, 0) >= 0);
        CHECK(std::abs(hk(i, 5)) < 0.1);
    }
    CHECK_THROWS_AS(init_relations(ModelFamily::transe, 1, 4, 0.0, 1), ConfigError);
}

TEST_CASE("checkpoint round trip and vocabulary check") {
    testing::TempDir dir("ckpt");
    Vocab v;
    v.entities.intern("a");
    v.entities.intern("b");
    v.relations.intern("r");
    ModelState st;
    st.family = ModelFamily::hake;
    st.gamma = 6;
    st.entities = Matrix(2, 4, {0.5, 1, -2, 0.25, 1, 2, 3, 4});
    st.relations = Matrix(1, 5, {1, 2, 3, 4, 1});
    save_checkpoint(dir.path(), st, v);
    const auto back = load_checkpoint(dir.path(), &v);
    CHECK(back.family == st.family);
    CHECK(back.gamma == 6);
    CHECK(back.entities == st.entities);
    CHECK(back.relations == st.relations);

    Vocab other = v;
    other.entities.intern("c");
    CHECK_THROWS_AS(load_checkpoint(dir.path(), &other), VocabError);
    CHECK(vocab_hash(v.entities) != vocab_hash(other.entities));
    CHECK(vocab_hash(v.entities).size() == 64);
}
