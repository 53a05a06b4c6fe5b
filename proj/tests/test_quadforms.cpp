#include "doctest.h"

#include "qdec/quadforms.hpp"

using namespace qdec;

namespace {

Cap cap(RVec anchor, int level) { return Cap{std::move(anchor), level}; }

}  // namespace

TEST_CASE("gradient_matrix examples") {
    auto p1 = parabola(1);
    CHECK(gradient_matrix(p1, {0}) == RMatrix::from_rows({{0}}));
    CHECK(gradient_matrix(p1, {Q(1, 2)}) == RMatrix::from_rows({{1}}));
    auto sq = diagonal_tuple({{1, 0}, {0, 1}});
    CHECK(gradient_matrix(sq, {1, 1}) == RMatrix::from_rows({{2, 0}, {0, 2}}));
    CHECK_THROWS(gradient_matrix(sq, {1}));
}

TEST_CASE("tangent_frame examples") {
    auto p1 = parabola(1);
    CHECK(tangent_frame(p1, {0}) == std::vector<RVec>{{1, 0}});
    CHECK(tangent_frame(p1, {Q(1, 2)}) == std::vector<RVec>{{1, 1}});
    auto p2 = parabola(2);
    CHECK(tangent_frame(p2, {1, 0}) == std::vector<RVec>{{1, 0, 2}, {0, 1, 0}});
}

TEST_CASE("tangent frame spans a d-dimensional space") {
    auto T = diagonal_tuple({{1, 2, -1, 3}, {0, 1, 5, -2}});
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        RVec t(4);
        for (auto& v : t) v = Q(uniform_int(rng, -20, 20), uniform_int(rng, 1, 9));
        auto fr = tangent_frame(T, t);
        CHECK(rank(RMatrix::from_rows(fr)) == 4);
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 4; ++k) CHECK(fr[j][k] == (j == k ? 1 : 0));
    }
}

TEST_CASE("reparametrization of the unit cap at the origin is the identity") {
    auto T = diagonal_tuple({{1, 2}, {3, -1}});
    Reparam r = reparam(cap({0, 0}, 0), T);
    CHECK(r.L == RMatrix::identity(4));
}

TEST_CASE("reparametrization block structure") {
    auto T = parabola(2);
    Reparam r = reparam(cap({Q(1, 4), Q(1, 2)}, 2), T);
    // diag(1/4, 1/4, 1/16) * [[I, grad], [0, 1]] with grad = (1/2, 1)
    RMatrix expect = RMatrix::from_rows({{Q(1, 4), 0, Q(1, 8)}, {0, Q(1, 4), Q(1, 4)}, {0, 0, Q(1, 16)}});
    CHECK(r.L == expect);
}

TEST_CASE("uncertainty_box examples") {
    auto p1 = parabola(1);
    CHECK(minimal_C(p1) == 4);
    CHECK_THROWS_AS(uncertainty_box(cap({0}, 0), p1, 2), Error);
    // Below the module minimum the constructor refuses, so build the C = 2 box by hand.
    UncertaintyBox b = uncertainty_box(cap({0}, 0), p1, 4);
    b.C = 2;
    CHECK(b.center == RVec{0, 0});
    CHECK(b.generator == RMatrix::identity(2));
    CHECK(b.contains(RVec{Q(1, 2), Q(1, 4)}));
    CHECK_FALSE(b.contains(RVec{3, 0}));
    for (const auto& c : caps_partition(2, 2)) {
        auto T = parabola(2);
        auto box = uncertainty_box(c, T, minimal_C(T));
        CHECK(box.contains(box.center));
    }
}

TEST_CASE("uncertainty box contains the graph over its cap") {
    auto T = diagonal_tuple({{1, -2, 3, Q(1, 2)}, {2, 1, -1, 4}});
    Rational C = minimal_C(T);
    Rng rng(4);
    for (int level : {0, 1, 3}) {
        auto caps = caps_partition(4, level);
        for (int rep = 0; rep < 10; ++rep) {
            const Cap& c = caps[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(caps.size()) - 1))];
            auto box = uncertainty_box(c, T, C);
            RVec t = c.anchor;
            for (auto& v : t) v += c.side() * Q(uniform_int(rng, 0, 64), 64);
            RVec pt = t;
            for (const auto& v : T.eval_all(t)) pt.push_back(v);
            CHECK(box.contains(pt));
        }
    }
}

TEST_CASE("box nesting holds exhaustively for the one-dimensional parabola") {
    auto T = parabola(1);
    Rational C = minimal_C(T);
    long checked = 0;
    for (int outer = 0; outer <= 6; ++outer)
        for (const auto& big : caps_partition(1, outer)) {
            auto ub = uncertainty_box(big, T, C);
            for (int inner = outer; inner <= 6; ++inner)
                for (const auto& small : caps_partition(1, inner)) {
                    if (!big.dilate_contains(2, small, 2)) continue;
                    ++checked;
                    CHECK(ub.contains(uncertainty_box(small, T, C)));
                }
        }
    CHECK(checked > 100);
}

TEST_CASE("box nesting fails for a corner child of the two-dimensional parabola") {
    // Child [1/4,1/2]^2 of [0,1/2]^2: the shear of the child box exceeds the parent's
    // normal thickness for every C, so containment is reported false.
    auto T = parabola(2);
    Cap parent = cap({0, 0}, 1), child = cap({Q(1, 4), Q(1, 4)}, 2);
    REQUIRE(parent.dilate_contains(2, child, 2));
    for (long C : {9L, 100L, 10000L}) {
        auto outer = uncertainty_box(parent, T, C), inner = uncertainty_box(child, T, C);
        CHECK_FALSE(outer.contains(inner));
        RVec corner{Q(1, 4) + Q(C, 4), Q(1, 4) + Q(C, 4), Q(1, 8) + Q(5 * C, 16)};
        CHECK(inner.contains(corner));
        CHECK_FALSE(outer.contains(corner));
    }
}

TEST_CASE("box containment agrees with vertex enumeration") {
    auto T = parabola(1);
    Rational C = minimal_C(T);
    for (const auto& big : caps_partition(1, 2))
        for (const auto& small : caps_partition(1, 3)) {
            auto ub = uncertainty_box(big, T, C), us = uncertainty_box(small, T, C);
            bool all = true;
            for (int sx : {-1, 1})
                for (int sy : {-1, 1}) {
                    RVec v = us.generator * RVec{C * sx, C * sy};
                    for (std::size_t i = 0; i < 2; ++i) v[i] += us.center[i];
                    all = all && ub.contains(v);
                }
            CHECK(ub.contains(us) == all);
        }
}

TEST_CASE("restrict_to_hyperplane examples") {
    auto diag = diagonal_tuple({{1, 2, 3}, {4, 5, 6}});
    auto r0 = restrict_to_hyperplane(diag, Hyperplane::graph({0, 0}));
    CHECK(r0.forms[0] == RMatrix::from_rows({{1, 0}, {0, 2}}));
    CHECK(r0.forms[1] == RMatrix::from_rows({{4, 0}, {0, 5}}));

    auto p2 = parabola(2);
    auto r1 = restrict_to_hyperplane(p2, Hyperplane::graph({1}));
    CHECK(r1.d == 1);
    CHECK(r1.forms[0] == RMatrix::from_rows({{2}}));

    auto d4 = diagonal_tuple({{1, 2, 3, 4}, {5, 6, 7, 8}});
    auto r2 = restrict_to_hyperplane(d4, Hyperplane::graph({0, 0, 0}));
    CHECK(r2.forms[0] == RMatrix::from_rows({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}));
    CHECK(r2.forms[1] == RMatrix::from_rows({{5, 0, 0}, {0, 6, 0}, {0, 0, 7}}));
}

TEST_CASE("steep hyperplanes are re-graphed over the largest normal component") {
    Hyperplane h = Hyperplane::graph({3});  // t2 = 3 t1, normal (-3, 1)
    CHECK(h.default_graph_var() == 0);
    Hyperplane vertical{{1, 0}, 0};  // t1 = 0, not a graph over t2
    CHECK(vertical.default_graph_var() == 0);
    auto r = restrict_to_hyperplane(parabola(2), vertical);
    CHECK(r.forms[0] == RMatrix::from_rows({{1}}));
}

TEST_CASE("restriction commutes with evaluation") {
    auto T = diagonal_tuple({{1, -2, 3, 1}, {2, 1, -1, 4}});
    T.forms[0](0, 2) = T.forms[0](2, 0) = Q(1, 3);
    Rng rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        RVec normal(4);
        for (auto& v : normal) v = Q(uniform_int(rng, -5, 5), uniform_int(rng, 1, 4));
        if (normal == RVec(4, Rational(0))) normal[3] = 1;
        Hyperplane H{normal, 0};
        auto R = restrict_to_hyperplane(T, H);
        RVec tp(3);
        for (auto& v : tp) v = Q(uniform_int(rng, -9, 9), uniform_int(rng, 1, 5));
        auto basis = H.basis();
        RVec t(4);
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < 4; ++i) t[i] += basis[j][i] * tp[j];
        CHECK(dot(normal, t) == 0);
        CHECK(R.eval_all(tp) == T.eval_all(t));
    }
}

TEST_CASE("caps_partition and subcaps") {
    CHECK(caps_partition(1, 1).size() == 2);
    CHECK(caps_partition(2, 2).size() == 16);
    auto s = subcaps(cap({0, 0}, 1), 3);
    REQUIRE(s.size() == 16);
    for (const auto& c : s) {
        for (const auto& a : c.anchor) {
            CHECK(a >= 0);
            CHECK(a < Q(1, 2));
            CHECK(Rational(a * 8).get_den() == 1);
        }
        CHECK(cap({0, 0}, 1).contains(c));
    }
    CHECK(dyadic_level(Q(1, 8)) == 3);
    CHECK_THROWS_AS(dyadic_level(Q(1, 3)), ValidationError);
    CHECK_THROWS_AS(subcaps(cap({0}, 2), 1), ValidationError);
}

TEST_CASE("presets and json") {
    auto bd = parse_preset("BD-d2n2(1,0,1,0,1,0)");
    CHECK(bd.forms[0] == RMatrix::from_rows({{1, 0}, {0, 1}}));
    CHECK(bd.forms[1] == RMatrix::from_rows({{0, 1}, {1, 0}}));
    CHECK_THROWS_AS(parse_preset("BD-d2n2(1,0,1,2,0,2)"), ValidationError);
    auto dg = parse_preset("diag(1,1,1,1,1,2,3,4)");
    CHECK(dg.d == 4);
    CHECK(dg.n == 2);
    CHECK(dg.forms[1](3, 3) == 4);
    auto j = tuple_to_json(dg);
    auto back = tuple_from_json(j);
    CHECK(back.forms == dg.forms);
    CHECK_THROWS_AS(tuple_from_json(nlohmann::json::parse(R"({"d":2,"n":1,"forms":[["1","2","3","4"]]})")), ValidationError);
    CHECK_THROWS_AS(parse_preset("hyperbola(2)"), ValidationError);
}
