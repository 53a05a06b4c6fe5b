#include "doctest.h"

#include "qdec/hypotheses.hpp"

using namespace qdec;

namespace {

HypothesisConfig quick(unsigned samples, std::uint64_t seed = 1) {
    HypothesisConfig c;
    c.samples = samples;
    c.seed = seed;
    return c;
}

RVec diag_of(const RMatrix& m) {
    RVec v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, i);
    return v;
}

RVec random_diag(Rng& rng, std::size_t d) {
    RVec v(d);
    for (auto& x : v) x = Q(uniform_int(rng, -10, 10), 2);
    return v;
}

// a3 = b2 = 0, lambda_2 = lambda_3 = 0 and a1 + a4 l^2 = b1 + b4 l^2 = 0, with one more
// vanishing entry (a2 or b3) so that both restricted forms collapse to rank <= 1 together.
std::pair<QuadTuple, Hyperplane> appendix_pattern(const Rational& l, const Rational& a4, const Rational& b4, const Rational& free, bool kill_a2) {
    RVec a{-a4 * l * l, kill_a2 ? Rational(0) : free, 0, a4};
    RVec b{-b4 * l * l, 0, kill_a2 ? free : Rational(0), b4};
    return {diagonal_tuple({a, b}), Hyperplane::graph({l, 0, 0})};
}

}  // namespace

TEST_CASE("check_nondegeneracy examples") {
    auto r1 = check_nondegeneracy(parabola(3), quick(16));
    CHECK(r1.verdict == Verdict::PASS);

    auto same = diagonal_tuple({{1, 2, 3, 4}, {1, 2, 3, 4}});
    auto r2 = check_nondegeneracy(same, quick(16));
    REQUIRE(r2.verdict == Verdict::FAIL);
    CHECK(nondegeneracy_determinant(same, r2.witness_w).is_zero());

    auto good = diagonal_tuple({{1, 1, 1, 1}, {1, 2, 3, 4}});
    auto r3 = check_nondegeneracy(good, quick(64));
    CHECK(r3.verdict == Verdict::PASS);
    CHECK_THROWS(check_nondegeneracy(QuadTuple::make(1, 2, {RMatrix::identity(1), RMatrix::identity(1)}), quick(4)));
}

TEST_CASE("independent sampling oracle agrees on the (1,1,1,1),(1,2,3,4) pair") {
    auto good = diagonal_tuple({{1, 1, 1, 1}, {1, 2, 3, 4}});
    Rng rng(42);
    int zero = 0, tried = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<RVec> w(2, RVec(4));
        for (auto& row : w)
            for (auto& x : row) x = Q(uniform_int(rng, -30, 30), uniform_int(rng, 1, 6));
        if (rank(RMatrix::from_rows(w)) < 2) continue;
        ++tried;
        // det = sum over pairs of +-4 (a_i b_j - a_j b_i) t_i t_j times the complementary W-minor,
        // with distinct monomials, so it vanishes iff every term does.
        bool all_zero = true;
        for (std::size_t i = 0; i < 4 && all_zero; ++i)
            for (std::size_t j = i + 1; j < 4 && all_zero; ++j) {
                std::vector<std::size_t> c;
                for (std::size_t k = 0; k < 4; ++k)
                    if (k != i && k != j) c.push_back(k);
                Rational m = w[0][c[0]] * w[1][c[1]] - w[0][c[1]] * w[1][c[0]];
                if (m * Rational(static_cast<long>(j - i)) != 0) all_zero = false;
            }
        if (all_zero) ++zero;
    }
    CHECK(tried > 9000);
    CHECK(zero == 0);
    // Cross-check the closed form against the library determinant on a few tuples.
    for (int i = 0; i < 5; ++i) {
        std::vector<RVec> w(2, RVec(4));
        for (auto& row : w)
            for (auto& x : row) x = Rational(uniform_int(rng, -5, 5));
        MultiPoly det = nondegeneracy_determinant(good, w);
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = a + 1; b < 4; ++b) {
                std::vector<std::size_t> c;
                for (std::size_t k = 0; k < 4; ++k)
                    if (k != a && k != b) c.push_back(k);
                Rational m = w[0][c[0]] * w[1][c[1]] - w[0][c[1]] * w[1][c[0]];
                long sign = ((a + b + 1) % 2) ? -1 : 1;
                Multiindex e(4, 0);
                e[a] = e[b] = 1;
                CHECK(det.coeff(e) == Rational(sign * 4 * static_cast<long>(b - a)) * m);
            }
    }
}

TEST_CASE("criterion failure surfaces as an exact nondegeneracy witness") {
    auto T = diagonal_tuple({{1, 1, 0, 1}, {1, 1, 1, 0}});
    CHECK_FALSE(check_diagonal_criterion(diag_of(T.forms[0]), diag_of(T.forms[1])));
    auto r = check_nondegeneracy(T, quick(32));
    REQUIRE(r.verdict == Verdict::FAIL);
    CHECK(nondegeneracy_determinant(T, r.witness_w).is_zero());
    // The first form is semidefinite of rank 3, so its restriction to any hyperplane has rank >= 2.
    auto h = check_hyperplane_rank(T, quick(128));
    CHECK(h.verdict != Verdict::FAIL);
}

TEST_CASE("check_hyperplane_rank examples") {
    auto bd = parse_preset("BD-d2n2(1,0,1,0,1,0)");
    CHECK(check_hyperplane_rank(bd, quick(8)).verdict == Verdict::PASS);

    auto good = diagonal_tuple({{1, 1, 1, 1}, {1, 2, 3, 4}});
    auto r = check_hyperplane_rank(good, quick(256));
    CHECK(r.verdict == Verdict::LIKELY_PASS);
    CHECK(r.exact_checks >= 256);

    auto t3 = diagonal_tuple({{1, 0, 0}, {0, 1, 0}});
    CHECK(hyperplane_lambda_rank_ok(t3, Hyperplane::graph({0, 0})));
}

TEST_CASE("appendix pattern fails the exact lambda-minor check at its hyperplane") {
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        Rational l = Q(uniform_int(rng, 1, 9), uniform_int(rng, 1, 4));
        Rational a4 = Q(uniform_int(rng, 1, 5), 1), b4 = Q(-uniform_int(rng, 1, 5), 1), fr = Q(uniform_int(rng, 1, 7), 2);
        auto [T, H] = appendix_pattern(l, a4, b4, fr, i % 2 == 0);
        CHECK_FALSE(check_diagonal_criterion(diag_of(T.forms[0]), diag_of(T.forms[1])));
        CHECK_FALSE(hyperplane_lambda_rank_ok(T, H));
        auto R = restrict_to_hyperplane(T, H);
        CHECK(rank(R.forms[0]) <= 1);
        CHECK(rank(R.forms[1]) <= 1);
    }
    // With both a2 and b3 nonzero the two rank-one pieces combine to rank 2.
    auto T = diagonal_tuple({{-1, 2, 0, 1}, {-3, 0, 5, 3}});
    CHECK(hyperplane_lambda_rank_ok(T, Hyperplane::graph({1, 0, 0})));
}

TEST_CASE("hyperplane FAIL witnesses re-verify") {
    // P1 = t1^2, P2 = t1 t2 on R^4 restricted to {t1 = 0} vanish.
    RMatrix m1(4, 4), m2(4, 4);
    m1(0, 0) = 1;
    m2(0, 1) = m2(1, 0) = Q(1, 2);
    auto T = QuadTuple::make(4, 2, {m1, m2});
    auto r = check_hyperplane_rank(T, quick(16));
    REQUIRE(r.verdict == Verdict::FAIL);
    REQUIRE(r.witness_h.has_value());
    CHECK_FALSE(hyperplane_lambda_rank_ok(T, *r.witness_h));
}

TEST_CASE("check_diagonal_criterion examples") {
    CHECK(check_diagonal_criterion({1, 1, 1, 1}, {1, 2, 3, 4}));
    CHECK_FALSE(check_diagonal_criterion({1, 2, 3}, {1, 2, 3}));
    CHECK(check_diagonal_criterion({1, 1, 1}, {0, 1, 2}));
    CHECK_THROWS(check_diagonal_criterion({1, 1}, {1}));
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        RVec a = random_diag(rng, 4), b = random_diag(rng, 4);
        RVec pa{a[2], a[0], a[3], a[1]}, pb{b[2], b[0], b[3], b[1]};
        CHECK(check_diagonal_criterion(a, b) == check_diagonal_criterion(pa, pb));
    }
}

TEST_CASE("codim1_shortcut examples") {
    CHECK(codim1_shortcut(parabola(5)) == Codim1::APPLIES);
    CHECK(codim1_shortcut(diagonal_tuple({{1, 0}})) == Codim1::NOT_APPLICABLE);
    CHECK(codim1_shortcut(diagonal_tuple({{1, 1}, {1, 2}})) == Codim1::NOT_APPLICABLE);
}

TEST_CASE("hyperplane_decoupling_exponent examples") {
    CHECK(hyperplane_decoupling_exponent(4, 2, 4) == 1);
    CHECK(hyperplane_decoupling_exponent(3, 1, 2) == 0);
    CHECK_THROWS_WITH_AS(hyperplane_decoupling_exponent(5, 2, Q(12, 5)), doctest::Contains("n(d-2)"), Error);
    CHECK_THROWS(hyperplane_decoupling_exponent(4, 2, 5));
}

TEST_CASE("nondegeneracy verdict is invariant under (P1, P2) -> (P1 + P2, P2)") {
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
        RVec a = random_diag(rng, 4), b = random_diag(rng, 4);
        if (i % 5 == 0) b[1] = a[1] * 2, b[2] = a[2] * 2;  // force some criterion failures
        auto T = diagonal_tuple({a, b});
        RVec s(4);
        for (std::size_t k = 0; k < 4; ++k) s[k] = a[k] + b[k];
        auto U = diagonal_tuple({s, b});
        auto rt = check_nondegeneracy(T, quick(32, i)), ru = check_nondegeneracy(U, quick(32, i));
        CHECK((rt.verdict == Verdict::FAIL) == (ru.verdict == Verdict::FAIL));
        if (rt.verdict == Verdict::FAIL) CHECK(nondegeneracy_determinant(T, rt.witness_w).is_zero());
    }
}

TEST_CASE("diagonal criterion implies neither check fails") {
    Rng rng(23);
    int pass_pairs = 0;
    for (int i = 0; i < 30; ++i) {
        RVec a = random_diag(rng, 4), b = random_diag(rng, 4);
        if (!check_diagonal_criterion(a, b)) continue;
        ++pass_pairs;
        auto T = diagonal_tuple({a, b});
        CHECK(check_nondegeneracy(T, quick(64, i)).verdict != Verdict::FAIL);
        CHECK(check_hyperplane_rank(T, quick(64, i)).verdict != Verdict::FAIL);
    }
    CHECK(pass_pairs > 10);
}

TEST_CASE("report json") {
    auto r = check_nondegeneracy(diagonal_tuple({{1, 2, 3, 4}, {1, 2, 3, 4}}), quick(4));
    auto j = report_to_json(r);
    CHECK(j["verdict"] == "FAIL");
    CHECK(j["witness_w"].size() == 2);
}
