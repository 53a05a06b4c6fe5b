#include "doctest.h"

#include "qdec/capselect.hpp"

#include <set>

using namespace qdec;

namespace {

std::vector<double> diagonal_norms(std::size_t d, int level) {
    auto caps = caps_partition(d, level);
    std::vector<double> norms;
    for (const auto& c : caps) norms.push_back(c.anchor[0] == c.anchor[1] ? 1.0 : 0.0);
    return norms;
}

}  // namespace

TEST_CASE("initial stock thresholds") {
    auto caps1 = caps_partition(1, 1);
    CHECK(initial_stock(caps1, {1.0, 1.0}, 2, 1).caps.size() == 2);
    auto s = initial_stock(caps1, {1.0, 0.4}, 2, 1);
    REQUIRE(s.caps.size() == 1);
    CHECK(s.caps[0] == caps1[0]);
    CHECK(initial_stock({caps1[1]}, {0.3}, 2, 1).caps.size() == 1);
    CHECK(initial_stock({}, {}, 2, 1).caps.empty());
    CHECK_THROWS_AS(initial_stock(caps1, {1.0}, 2, 1), ValidationError);
    CHECK_THROWS_AS(initial_stock(caps1, {1.0, -1.0}, 2, 1), ValidationError);
}

TEST_CASE("collinear cap centers give a degree one variety") {
    std::vector<Cap> diag;
    for (const auto& c : caps_partition(2, 4))
        if (c.anchor[0] == c.anchor[1]) diag.push_back(c);
    auto cert = find_concentrating_variety(diag, 2, Q(1, 9), {});
    REQUIRE(cert);
    CHECK(cert->Z.degree() == 1);
    CHECK(cert->fraction == 1.0);
    CHECK(cert->exact);
    MultiPoly line = MultiPoly::variable(2, 0) * Q(1, 2) - MultiPoly::variable(2, 1) * Q(1, 2);
    CHECK((cert->Z == line || cert->Z == -line));
}

TEST_CASE("three caps always lie near a low degree curve") {
    auto all = caps_partition(2, 3);
    std::vector<Cap> three{all[3], all[20], all[45]};
    auto cert = find_concentrating_variety(three, 2, Q(1, 2), {});
    REQUIRE(cert);
    CHECK(cert->fraction >= 0.5);
}

TEST_CASE("emitted certificates respect their fraction bound") {
    auto all = caps_partition(2, 4);
    for (auto theta : {Q(1, 9), Q(1, 4), Q(1, 2)}) {
        VarietyConfig cfg;
        cfg.seed = 3;
        auto cert = find_concentrating_variety(all, 2, theta, cfg);
        if (!cert) continue;
        CHECK(cert->fraction >= to_double(theta));
        CHECK(poly_norm1(cert->Z) == 1);
        for (auto i : cert->captured) CHECK(captures(cert->Z, all[i]));
    }
    CHECK_THROWS_AS(find_concentrating_variety(all, 2, Rational(1), {}), ValidationError);
}

TEST_CASE("cube containment of caps") {
    auto caps = caps_partition(2, 3);
    Cap c{{Q(3, 8), Q(5, 8)}, 3};
    CHECK(cube_contains_cap(1, {0, 1}, c));
    CHECK(cube_contains_cap(3, {3, 5}, c));
    CHECK_FALSE(cube_contains_cap(1, {1, 1}, c));
    CHECK_FALSE(cube_contains_cap(4, {6, 10}, c));
    CHECK(cube_contains_cap(0, {0, 0}, c));
}

TEST_CASE("caps along a line are removed by a variety layer") {
    auto T = parabola(2);
    auto norms = diagonal_norms(2, 4);
    auto out = bg_select(T, norms, 16, {});
    CHECK(out.transverse.empty());
    CHECK(out.rounds == 1);
    REQUIRE(out.certificates.size() == 1);
    CHECK(out.certificates[0].Z.degree() == 1);
    std::size_t cubes = 0;
    for (const auto& l : out.layers) cubes += l.layer.cubes.size();
    CHECK(cubes > 0);
    CHECK(out.removed.size() == 16);
    CHECK(out.removed.size() + out.below_threshold.size() + out.transverse.size() == 256);
}

TEST_CASE("two separated caps are transverse") {
    auto T = parabola(1);
    std::vector<double> norms(8, 0.0);
    norms[0] = norms[7] = 1.0;
    auto out = bg_select(T, norms, 8, {});
    CHECK(out.transverse.size() == 2);
    CHECK(out.layers.empty());
    CHECK(out.rounds == 0);
    REQUIRE(out.report);
    CHECK(out.report->transverse);
}

TEST_CASE("empty norms and validation") {
    auto T = parabola(2);
    auto out = bg_select(T, {}, 16, {});
    CHECK(out.rounds == 0);
    CHECK(out.transverse.empty());
    CHECK_THROWS_AS(bg_select(T, {1.0, 2.0}, 16, {}), ValidationError);
    CHECK_THROWS_AS(bg_select(T, {1.0}, 12, {}), ValidationError);
}

TEST_CASE("selection on a mixed stock: accounting, dedup and determinism") {
    auto T = parabola(2);
    auto caps = caps_partition(2, 3);
    std::vector<double> norms(caps.size(), 0.0);
    Rng rng(11);
    for (std::size_t i = 0; i < caps.size(); ++i) {
        const auto& a = caps[i].anchor;
        if (a[1] == Q(1, 2) || a[0] == a[1]) norms[i] = 1.0 + uniform01(rng);
    }
    norms[0] = 1.0;
    SelectConfig cfg;
    cfg.transversality.random_points = 1;
    auto out = bg_select(T, norms, 8, cfg);
    CHECK(out.removed.size() + out.below_threshold.size() + out.transverse.size() == caps.size());
    std::set<Cap> seen;
    for (const auto& group : {out.removed, out.below_threshold, out.transverse})
        for (const auto& c : group) CHECK(seen.insert(c).second);
    for (std::size_t a = 0; a < out.layers.size(); ++a)
        for (const auto& idx : out.layers[a].layer.cubes)
            for (std::size_t b = 0; b < a; ++b)
                for (const auto& prev : out.layers[b].layer.cubes) {
                    int shift = out.layers[a].layer.level - out.layers[b].layer.level;
                    if (shift < 0) continue;
                    CHECK_FALSE((idx[0] >> shift == prev[0] && idx[1] >> shift == prev[1]));
                }
    for (const auto& c : out.certificates) CHECK(c.fraction >= to_double(out.theta));
    auto again = bg_select(T, norms, 8, cfg);
    CHECK(outcome_to_json(out).dump() == outcome_to_json(again).dump());
}
