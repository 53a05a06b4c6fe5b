#include "doctest.h"

#include "qdec/varieties.hpp"

#include <cmath>
#include <set>

using namespace qdec;

namespace {

MultiPoly x(std::size_t nv, std::size_t i) { return MultiPoly::variable(nv, i); }
MultiPoly c(std::size_t nv, const Rational& v) { return MultiPoly::constant(nv, v); }

MultiPoly normalized(const MultiPoly& p) { return p * (1 / poly_norm1(p)); }

MultiPoly random_cubic(Rng& rng) {
    MultiPoly p(2);
    for (unsigned t = 0; t <= 3; ++t)
        for (unsigned i = 0; i <= t; ++i) p.add_term({i, t - i}, Q(uniform_int(rng, -100, 100), 100));
    if (p.degree() < 1) p += x(2, 0);
    return normalized(p);
}

double vnorm(const std::vector<double>& v) {
    double s = 0;
    for (double t : v) s += t * t;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("scale ladder examples") {
    auto L0 = scale_ladder(1024, 2, 0);
    CHECK(L0.exps == std::vector<int>{10});
    CHECK(L0.cube_exps.empty());
    CHECK(scale_ladder(256, 1, 2).exps == std::vector<int>{2, 4, 8});
    CHECK(scale_ladder(512, 2, 1).exps == std::vector<int>{3, 9});
    auto L = scale_ladder(std::uint64_t{1} << 20, 2, 3);
    CHECK(L.exps == std::vector<int>{1, 2, 7, 20});
    CHECK(L.cube_exps == std::vector<int>{2, 4, 14});
    CHECK(L.comparability == 1);
    CHECK(L.K(4) == doctest::Approx(1 << 20));
    CHECK(L.radius(3) == doctest::Approx(std::ldexp(1.0, -14)));
}

TEST_CASE("scale ladder errors") {
    CHECK_THROWS_AS(scale_ladder(1000, 2, 1), ValidationError);
    CHECK_THROWS_AS(scale_ladder(1024, 0, 1), ValidationError);
    try {
        scale_ladder(4, 3, 2);
        FAIL("expected K_TOO_SMALL");
    } catch (const Error& e) {
        CHECK(e.code() == "K_TOO_SMALL");
    }
}

TEST_CASE("ladder invariants over a parameter grid") {
    for (long k = 1; k <= 40; ++k)
        for (long A = 1; A <= 3; ++A)
            for (long D = 1; D <= 3; ++D)
                for (auto mode : {LadderMode::LEMMA, LadderMode::COROLLARY}) {
                    ScaleLadder L;
                    try {
                        L = scale_ladder(std::uint64_t{1} << k, A, D, mode);
                    } catch (const Error&) {
                        continue;
                    }
                    CHECK(L.exps.back() == k);
                    CHECK(std::is_sorted(L.exps.begin(), L.exps.end()));
                    CHECK(std::is_sorted(L.cube_exps.begin(), L.cube_exps.end()));
                    CHECK(L.comparability <= A + 1);
                    if (mode == LadderMode::COROLLARY) {
                        // K^c <= first scale and last scale <= sqrt K, checked in exponents times (A+1)^D
                        long scale = 1;
                        for (long i = 0; i < D; ++i) scale *= A + 1;
                        CHECK(L.cube_exps.front() * scale >= k);
                        CHECK(2 * L.cube_exps.back() <= k);
                    } else {
                        CHECK(L.exps.front() >= 1);
                    }
                }
}

TEST_CASE("greedy derivative chain") {
    auto L1 = scale_ladder(1024, 2, 1);
    auto cert = sublevel_decompose(x(1, 0), L1);
    REQUIRE(cert.pieces.size() == 1);
    CHECK(cert.pieces[0].alpha == Multiindex{0});
    CHECK(cert.pieces[0].poly == x(1, 0));

    auto L2 = scale_ladder(1024, 2, 2);
    auto c2 = sublevel_decompose(x(2, 0) * x(2, 1), L2);
    REQUIRE(c2.pieces.size() == 2);
    CHECK(c2.pieces[1].alpha == Multiindex{0, 0});
    CHECK(c2.pieces[0].alpha == Multiindex{1, 0});
    CHECK(c2.pieces[0].poly == x(2, 1));
    CHECK(c2.c0 == Q(1, 4));
    CHECK(c2.c1 == Q(1, 4));

    // the larger derivative wins over the lexicographic tie break
    auto p = normalized(x(2, 0) * x(2, 1) + x(2, 1) * x(2, 1) * Rational(3));
    auto c3 = sublevel_decompose(p, L2);
    CHECK(c3.pieces[0].alpha == Multiindex{0, 1});

    Rng rng(17);
    auto L3 = scale_ladder(std::uint64_t{1} << 20, 2, 3);
    for (int i = 0; i < 20; ++i) {
        auto q = random_cubic(rng);
        if (q.degree() < 3) continue;
        auto cq = sublevel_decompose(q, L3);
        for (std::size_t j = 1; j <= 3; ++j) {
            CHECK(total_degree(cq.pieces[j - 1].alpha) == 3 - j);
            CHECK(cq.pieces[j - 1].poly == poly_partial(q, cq.pieces[j - 1].alpha));
            if (j > 1)
                for (std::size_t v = 0; v < 2; ++v) CHECK(cq.pieces[j - 2].alpha[v] >= cq.pieces[j - 1].alpha[v]);
        }
    }
}

TEST_CASE("sublevel decomposition errors") {
    auto L = scale_ladder(1024, 2, 2);
    CHECK_THROWS_AS(sublevel_decompose(x(2, 0) * Rational(2), L), ValidationError);
    CHECK_THROWS_AS(sublevel_decompose(normalized(x(2, 0) * x(2, 0) * x(2, 1)), L), ValidationError);
    auto flat = normalized(c(2, 1) + x(2, 0) * Q(1, 100));
    try {
        sublevel_decompose(flat, L);
        FAIL("expected ALL_DERIVATIVES_SMALL");
    } catch (const Error& e) {
        CHECK(e.code() == "ALL_DERIVATIVES_SMALL");
    }
}

TEST_CASE("sublevel inclusion for a coordinate hyperplane") {
    auto L = scale_ladder(1024, 2, 1);
    auto cert = sublevel_decompose(x(2, 0), L);
    auto rep = verify_sublevel_inclusion(x(2, 0), cert, L, 2000, 3);
    CHECK(rep.samples == 2000);
    CHECK(rep.violations == 0);
    CHECK_FALSE(rep.vacuous);
}

TEST_CASE("sublevel inclusion is vacuous without zeros in the ball") {
    auto p = normalized(x(2, 0) * x(2, 0) + x(2, 1) * x(2, 1) + c(2, 4));
    auto L = scale_ladder(1024, 2, 2);
    auto cert = sublevel_decompose(p, L);
    auto rep = verify_sublevel_inclusion(p, cert, L, 200, 3);
    CHECK(rep.vacuous);
    CHECK(rep.samples == 0);
    CHECK(rep.violations == 0);
}

TEST_CASE("sublevel inclusion on random cubics") {
    Rng rng(99);
    auto L = scale_ladder(std::uint64_t{1} << 20, 2, 3);
    for (int i = 0; i < 5; ++i) {
        auto p = random_cubic(rng);
        if (p.degree() < 3) continue;
        SublevelCertificate cert;
        try {
            cert = sublevel_decompose(p, L);
        } catch (const Error&) {
            continue;
        }
        auto rep = verify_sublevel_inclusion(p, cert, L, 500, 100 + static_cast<std::uint64_t>(i));
        CHECK(rep.violations == 0);
    }
}

TEST_CASE("small values with large gradient sit near regular zeros") {
    // f with Hessian norm at most 1 on the unit ball, Omega the unit ball
    Rng rng(7);
    const double sigma = 0.05, eta = 0.1;
    std::size_t checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        MultiPoly f(2);
        for (unsigned t = 0; t <= 3; ++t)
            for (unsigned i = 0; i <= t; ++i) f.add_term({i, t - i}, Q(uniform_int(rng, -100, 100), 100));
        Rational hess = 0;
        for (const auto& [a, coef] : f.terms()) {
            unsigned deg = total_degree(a);
            if (deg >= 2) hess += abs(coef) * Rational(deg * (deg - 1));
        }
        if (hess == 0) continue;
        f = f * (1 / (2 * hess)) + x(2, 0) * Q(uniform_int(rng, -100, 100), 100) + x(2, 1) * Q(uniform_int(rng, -100, 100), 100);
        for (int s = 0; s < 200; ++s) {
            std::vector<double> p{uniform(rng, -1, 1), uniform(rng, -1, 1)}, y;
            if (!find_zero_near(f, p, 2.0, y)) continue;
            auto g = poly_gradient(f, y);
            double gg = vnorm(g) * vnorm(g), off = uniform(rng, -1, 1) * sigma * eta;
            if (gg == 0) continue;
            for (std::size_t i = 0; i < 2; ++i) p[i] = y[i] + off * g[i] / gg;
            double r = vnorm(p);
            if (r >= 1) continue;
            if (std::fabs(poly_eval(f, p)) > sigma * eta || vnorm(poly_gradient(f, p)) <= sigma + eta) continue;
            ++checked;
            if (1 - r <= 1.05 * sigma) continue;
            std::vector<double> z;
            bool found = find_zero_near(f, p, 1.05 * sigma, z);
            CHECK(found);
            if (found) CHECK(vnorm(poly_gradient(f, z)) > eta);
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("cover of a vertical line") {
    auto P = x(2, 0) - c(2, Q(1, 2));
    auto cover = variety_cube_cover(P, 1024, 2, 2);
    REQUIRE(cover.layers.size() == 1);
    CHECK(cover.layers[0].level == 6);
    CHECK(cover.layers[0].cubes.size() == 4 * 64);
    for (const auto& idx : cover.layers[0].cubes) CHECK((idx[0] >= 30 && idx[0] <= 33));
    auto pts = sample_zero_neighborhood(P, 1024, 1000, 5);
    CHECK(pts.size() == 1000);
    for (const auto& p : pts) {
        CHECK(std::fabs(p[0] - 0.5) < 1.0 / 1024);
        CHECK(cover.covers(p));
    }
    CHECK_FALSE(cover.covers({0.1, 0.5}));
}

TEST_CASE("cover is empty without real zeros") {
    auto P = x(2, 0) * x(2, 0) + x(2, 1) * x(2, 1) + c(2, 1);
    auto cover = variety_cube_cover(P, 1024, 2, 2);
    CHECK(cover.layers.size() == 2);
    for (const auto& layer : cover.layers) CHECK(layer.cubes.empty());
    CHECK_THROWS_AS(variety_cube_cover(MultiPoly(2), 1024, 2, 2), ValidationError);
}

TEST_CASE("cover layers are disjoint, deduplicated and cover the neighborhood") {
    Rng rng(23);
    for (int trial = 0; trial < 3; ++trial) {
        auto P = random_cubic(rng);
        CoverOptions opts;
        auto cover = variety_cube_cover(P, 1 << 14, 2, 2, opts);
        for (std::size_t j = 0; j < cover.layers.size(); ++j) {
            const auto& layer = cover.layers[j];
            std::set<std::vector<std::int64_t>> uniq(layer.cubes.begin(), layer.cubes.end());
            CHECK(uniq.size() == layer.cubes.size());
            for (const auto& idx : layer.cubes)
                for (std::size_t e = 0; e < j; ++e) {
                    int shift = layer.level - cover.layers[e].level;
                    REQUIRE(shift >= 0);
                    std::vector<std::int64_t> anc{idx[0] >> shift, idx[1] >> shift};
                    CHECK(std::find(cover.layers[e].cubes.begin(), cover.layers[e].cubes.end(), anc) ==
                          cover.layers[e].cubes.end());
                }
        }
        auto pts = sample_zero_neighborhood(P, 1 << 14, 300, 40 + static_cast<std::uint64_t>(trial));
        std::size_t missed = 0;
        for (const auto& p : pts) missed += cover.covers(p) ? 0 : 1;
        CHECK(missed == 0);
    }
}

TEST_CASE("json serialization") {
    auto cover = variety_cube_cover(x(2, 0) - c(2, Q(1, 2)), 1024, 2, 2);
    auto j = cover_to_json(cover);
    CHECK(j["ladder"]["log2_K"] == nlohmann::json{3, 10});
    CHECK(j["layers"][0]["cubes"].size() == 256);
    CHECK(certificate_to_json(cover.chain)["pieces"][0]["alpha"] == nlohmann::json{0, 0});
    CHECK(report_to_json(InclusionReport{})["vacuous"] == false);
}
