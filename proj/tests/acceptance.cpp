#include "qdec/capselect.hpp"
#include "qdec/cli.hpp"
#include "qdec/decnum.hpp"
#include "qdec/hypotheses.hpp"
#include "qdec/transversality.hpp"
#include "qdec/varieties.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

using namespace qdec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& body, double limit_seconds) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > limit_seconds) {
        o.pass = false;
        o.detail += " (over time limit)";
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d: %s  [%.1fs] %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
}

RVec random_diag(Rng& rng) {
    RVec v(4);
    for (auto& x : v) x = Q(uniform_int(rng, -20, 20), 4);
    return v;
}

MultiPoly random_cubic(Rng& rng) {
    MultiPoly p(2);
    for (unsigned t = 0; t <= 3; ++t)
        for (unsigned i = 0; i <= t; ++i) p.add_term({i, t - i}, Q(uniform_int(rng, -100, 100), 100));
    if (p.degree() < 1) p += MultiPoly::variable(2, 0);
    return p * (1 / poly_norm1(p));
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome diagonal_equivalence() {
    Rng rng(2024);
    int criterion_true = 0, fails = 0;
    for (int i = 0; i < 200; ++i) {
        RVec a = random_diag(rng), b = random_diag(rng);
        if (!check_diagonal_criterion(a, b)) continue;
        ++criterion_true;
        auto T = diagonal_tuple({a, b});
        HypothesisConfig cfg;
        cfg.seed = 1000 + static_cast<std::uint64_t>(i);
        cfg.samples = 256;
        if (check_nondegeneracy(T, cfg).verdict == Verdict::FAIL) ++fails;
        if (check_hyperplane_rank(T, cfg).verdict == Verdict::FAIL) ++fails;
    }
    // a3 = b2 = 0 family with its construction hyperplane t1 = l t4
    int detected = 0, patterns = 0;
    for (int i = 0; i < 20; ++i) {
        Rational l = Q(uniform_int(rng, 1, 9), uniform_int(rng, 1, 4));
        Rational a4 = Q(uniform_int(rng, 1, 5), 1), b4 = Q(-uniform_int(rng, 1, 5), 1), fr = Q(uniform_int(rng, 1, 7), 2);
        bool kill_a2 = i % 2 == 0;
        RVec a{-a4 * l * l, kill_a2 ? Rational(0) : fr, 0, a4};
        RVec b{-b4 * l * l, 0, kill_a2 ? fr : Rational(0), b4};
        ++patterns;
        if (!hyperplane_lambda_rank_ok(diagonal_tuple({a, b}), Hyperplane::graph({l, 0, 0}))) ++detected;
    }
    return {fails == 0 && criterion_true > 0 && detected == patterns,
            fmt("%.0f criterion-true pairs, %.0f FAIL verdicts, ", criterion_true, fails) +
                fmt("appendix pattern detected %.0f/%.0f", detected, patterns)};
}

Outcome bl_closed_form() {
    double worst = 0.0;
    for (double phi : {M_PI / 2, M_PI / 3, M_PI / 4, M_PI / 6}) {
        auto B = BLDatum::make(2, {{{1.0, 0.0}}, {{std::cos(phi), std::sin(phi)}}});
        auto r = bl_constant_gaussian(B);
        if (r.divergent) return {false, "unexpected divergence"};
        worst = std::max(worst, std::fabs(r.value - 1 / std::fabs(std::sin(phi))));
    }
    bool div = bl_constant_gaussian(BLDatum::make(2, {{{1.0, 0.0}}, {{1.0, 0.0}}})).divergent;
    return {worst < 1e-6 && div, fmt("max error %.2e, coincident lines divergent: %.0f", worst, div)};
}

Outcome bcct_equivalence() {
    Rng rng(77);
    int disagree = 0, infeasible = 0;
    for (int i = 0; i < 20; ++i) {
        std::vector<RVec> dirs;
        for (int j = 0; j < 3; ++j) dirs.push_back({Q(uniform_int(rng, -6, 6), 1), Q(uniform_int(rng, 1, 6), 1)});
        if (i % 4 == 0) dirs[1] = dirs[0];
        if (i % 7 == 0) dirs[2] = dirs[0];
        std::vector<Subspace> spaces;
        for (const auto& v : dirs) spaces.emplace_back(2, std::vector<RVec>{v});
        bool div = bl_constant_gaussian(BLDatum::from_subspaces(spaces)).divergent;
        bool inf = !bcct_sampled(spaces, Q(2, 3), {}).feasible;
        disagree += div != inf;
        infeasible += inf;
    }
    auto P2 = parabola(2);
    for (int i = 0; i < 20; ++i) {
        std::vector<RVec> ts;
        for (int j = 0; j < 3; ++j) ts.push_back({Q(uniform_int(rng, 0, 64), 64), Q(uniform_int(rng, 0, 64), 64)});
        if (i % 3 == 0) ts[2] = {ts[0][0] * 2 - ts[1][0], ts[0][1] * 2 - ts[1][1]};
        if (i % 5 == 0) ts[1] = ts[0];
        std::vector<Subspace> spaces;
        for (const auto& t : ts) spaces.push_back(tangent_space(P2, t));
        bool div = bl_constant_gaussian(BLDatum::from_subspaces(spaces)).divergent;
        bool inf = !bcct_sampled(P2, ts, {}).feasible;
        disagree += div != inf;
        infeasible += inf;
    }
    return {disagree == 0, fmt("40 configurations, %.0f infeasible, %.0f disagreements", infeasible, disagree)};
}

Outcome sharpness_exponents() {
    auto P = parabola(1);
    SharpnessConfig cfg;
    cfg.family = "modulated";
    auto mod = sharpness(P, cfg);
    cfg.family = "rescaled";
    auto res = sharpness(P, cfg);
    QuadTuple line = QuadTuple::make(1, 1, {RMatrix(1, 1)});
    cfg.family = "modulated";
    auto flat = sharpness(line, cfg);
    double target = 1.0 / 3, flat_target = 2 * (0.5 - 1.0 / 6) - 0.1;
    bool ok = std::fabs(mod.fit.slope - target) <= 0.1 && std::fabs(res.fit.slope - target) <= 0.1 && flat.fit.slope >= flat_target;
    return {ok, fmt("modulated %.4f, rescaled %.4f, ", mod.fit.slope, res.fit.slope) +
                    fmt("flat line %.4f (need >= %.4f)", flat.fit.slope, flat_target)};
}

Outcome descent_arithmetic() {
    Rng rng(5);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        long d = uniform_int(rng, 1, 4), n = uniform_int(rng, 1, 4);
        Rational p = Rational(2 * (d + n)) / d + rationalize(uniform(rng, 0.5, 6.0), 32);
        p.canonicalize();
        Rational sigma = rationalize(uniform(rng, 0.05, 3.0), 64);
        double pd = to_double(p), s = to_double(sigma);
        double pt = std::max(2.0, pd * d / (d + n));
        double kappa = (0.5 - 1 / pt) / (0.5 - 1 / pd);
        double m = std::ceil(d / (2 * kappa * s) - 1e-12);
        double closed = s * std::pow(1 - kappa, m);
        worst = std::max(worst, std::fabs(to_double(eta_tilde(sigma, d, n, p)) - closed));
    }
    int bad_seq = 0;
    for (int i = 0; i < 100; ++i) {
        long d = uniform_int(rng, 1, 3), n = uniform_int(rng, 1, 3);
        Rational p = Rational(2 * (d + n)) / d + rationalize(uniform(rng, 0.2, 6.0), 16);
        p.canonicalize();
        Rational base = Rational(d) * (Q(1, 2) - 1 / p);
        Rational Lambda = base + rationalize(uniform(rng, 0.0, 1.0), 16);
        Rational eta0 = Lambda + rationalize(uniform(rng, 0.0, 2.0), 16);
        auto seq = descent_iterate(descent_state(d, n, p, eta0, Lambda), 20);
        for (std::size_t k = 1; k < seq.size(); ++k)
            if (seq[k] < Lambda || (seq[k - 1] > Lambda && !(seq[k] < seq[k - 1]))) ++bad_seq;
    }
    bool boundary = true;
    for (long d = 1; d <= 4; ++d)
        for (long n = 1; n <= 4; ++n) {
            Rational p = Rational(2 * (d + 2 * n)) / d;
            p.canonicalize();
            boundary = boundary && kappa_ptilde(d, n, p).kappa == Q(1, 2);
        }
    auto seq = descent_iterate(descent_state(2, 1, 6, 2), 1);
    bool first = seq.size() == 2 && seq[1] == Q(5, 3);
    return {worst <= 1e-12 && bad_seq == 0 && boundary && first,
            fmt("max |eta - closed| %.2e, bad steps %.0f, ", worst, bad_seq) +
                fmt("boundary kappa ok %.0f, first step 5/3 %.0f", boundary, first)};
}

Outcome sublevel_covering() {
    Rng rng(606);
    std::size_t polys = 0, skipped = 0, violations = 0, samples = 0, vacuous = 0, short_runs = 0;
    std::uint64_t seed = 1;
    while (polys < 50) {
        auto P = random_cubic(rng);
        auto ladder = scale_ladder(std::uint64_t{1} << 20, 2, static_cast<long>(P.degree()));
        SublevelCertificate cert;
        try {
            cert = sublevel_decompose(P, ladder);
        } catch (const ValidationError&) {
            ++skipped;
            continue;
        } catch (const Error&) {
            ++skipped;
            continue;
        }
        auto rep = verify_sublevel_inclusion(P, cert, ladder, 10000, seed++);
        violations += rep.violations;
        samples += rep.samples;
        vacuous += rep.vacuous;
        short_runs += !rep.vacuous && rep.samples < 10000;
        ++polys;
    }
    return {violations == 0, fmt("50 polynomials, %.0f samples, %.0f violations", static_cast<double>(samples), static_cast<double>(violations)) +
                                 fmt(", %.0f without zeros in the unit ball, %.0f short of 10^4 samples", static_cast<double>(vacuous), static_cast<double>(short_runs)) +
                                 fmt(", %.0f draws outside the lemma hypothesis skipped", static_cast<double>(skipped))};
}

Outcome variety_covers() {
    Rng rng(707);
    std::size_t missed = 0, points = 0, dup = 0, cross = 0, empty = 0;
    std::uint64_t K = std::uint64_t{1} << 14;
    for (int i = 0; i < 20; ++i) {
        auto P = random_cubic(rng);
        auto cover = variety_cube_cover(P, K, 2, 2);
        std::vector<std::set<std::vector<std::int64_t>>> sets;
        for (const auto& layer : cover.layers) {
            std::set<std::vector<std::int64_t>> s(layer.cubes.begin(), layer.cubes.end());
            dup += layer.cubes.size() - s.size();
            sets.push_back(std::move(s));
        }
        for (std::size_t j = 0; j < cover.layers.size(); ++j)
            for (const auto& idx : cover.layers[j].cubes)
                for (std::size_t e = 0; e < j; ++e) {
                    int shift = cover.layers[j].level - cover.layers[e].level;
                    std::vector<std::int64_t> anc{idx[0] >> shift, idx[1] >> shift};
                    cross += sets[e].count(anc);
                }
        auto pts = sample_zero_neighborhood(P, static_cast<double>(K), 10000, 900 + static_cast<std::uint64_t>(i));
        points += pts.size();
        empty += pts.empty() ? 1 : 0;
        for (const auto& x : pts) missed += cover.covers(x) ? 0 : 1;
    }
    return {missed == 0 && dup == 0 && cross == 0 && points > 0,
            fmt("%.0f points, %.0f uncovered, ", static_cast<double>(points), static_cast<double>(missed)) +
                fmt("%.0f duplicate cubes, %.0f cross-layer overlaps", static_cast<double>(dup), static_cast<double>(cross)) +
                fmt(", %.0f polynomials without zeros in the square", static_cast<double>(empty))};
}

Outcome cap_selection() {
    Rng rng(808);
    Rational theta = compute_theta(2, 1);
    int collinear_ok = 0, collinear_total = 0;
    for (int i = 0; i < 30; ++i) {
        int level = static_cast<int>(uniform_int(rng, 3, 5));
        long side = 1L << level;
        long dx = uniform_int(rng, 0, 2), dy = uniform_int(rng, dx == 0 ? 1 : -2, 2);
        long x = uniform_int(rng, 0, side - 1), y = uniform_int(rng, 0, side - 1);
        std::vector<Cap> caps;
        while (x >= 0 && y >= 0 && x < side && y < side) {
            caps.push_back(Cap{{Rational(x) * dyadic(level), Rational(y) * dyadic(level)}, level});
            x += dx;
            y += dy;
        }
        if (caps.size() < 2) continue;
        ++collinear_total;
        auto cert = find_concentrating_variety(caps, 2, theta, {});
        if (cert && cert->Z.degree() == 1 && cert->fraction >= to_double(theta)) ++collinear_ok;
    }
    auto T = parabola(2);
    int within = 0, total = 0;
    std::string worst;
    for (int k : {3, 4, 5}) {
        std::uint64_t K = std::uint64_t{1} << k;
        auto caps = caps_partition(2, k);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> norms(caps.size(), 0.0);
            int kind = trial % 3;
            for (std::size_t c = 0; c < caps.size(); ++c) {
                if (kind == 0) norms[c] = uniform01(rng);
                else if (kind == 1) norms[c] = uniform01(rng) < 0.1 ? 1.0 + uniform01(rng) : 0.0;
                else {
                    const auto& a = caps[c].anchor;
                    norms[c] = (a[0] == a[1] || a[1] == Q(1, 2)) ? 1.0 : (uniform01(rng) < 0.05 ? 1.0 : 0.0);
                }
            }
            SelectConfig cfg;
            cfg.transversality.random_points = 1;
            cfg.transversality.seed = static_cast<std::uint64_t>(trial);
            cfg.variety.seed = static_cast<std::uint64_t>(trial);
            auto out = bg_select(T, norms, K, cfg);
            std::size_t bound = static_cast<std::size_t>(k) * static_cast<std::size_t>(std::ceil(1 / to_double(out.theta)));
            ++total;
            if (out.rounds <= bound) ++within;
        }
    }
    bool thetas = compute_theta(4, 2) == Q(1, 9) && compute_theta(1, 1) == Q(1, 2);
    return {collinear_ok == collinear_total && within == total && thetas,
            fmt("collinear %.0f/%.0f, round bound met %.0f/", collinear_ok, collinear_total, within) +
                fmt("%.0f, theta values %.0f", total, thetas)};
}

Outcome nesting() {
    struct Case {
        std::string name;
        QuadTuple T;
        int max_level;
    };
    std::vector<Case> cases{{"parabola(1)", parabola(1), 6},
                            {"parabola(2)", parabola(2), 6},
                            {"diag(1,1,1,1;1,2,3,4)", diagonal_tuple({{1, 1, 1, 1}, {1, 2, 3, 4}}), 2}};
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
        Rational C = minimal_C(c.T);
        long checked = 0, violations = 0;
        for (int outer = 0; outer <= c.max_level; ++outer)
            for (const auto& big : caps_partition(c.T.d, outer)) {
                auto ub = uncertainty_box(big, c.T, C);
                for (int inner = outer; inner <= c.max_level; ++inner)
                    for (const auto& small : caps_partition(c.T.d, inner)) {
                        if (!big.dilate_contains(2, small, 2)) continue;
                        ++checked;
                        if (!ub.contains(uncertainty_box(small, c.T, C))) ++violations;
                    }
            }
        ok = ok && violations == 0;
        detail += c.name + " (levels <= " + std::to_string(c.max_level) + "): " + std::to_string(violations) + "/" +
                  std::to_string(checked) + " violations; ";
    }
    return {ok, detail};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    auto root = fs::temp_directory_path() / "qdec_acceptance_runs";
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "cubic.json") << poly_to_json(MultiPoly::variable(2, 0) * MultiPoly::variable(2, 0) * Q(1, 2) -
                                                       MultiPoly::variable(2, 1) * Q(1, 2))
                                              .dump();
    auto base = [&](const std::string& cmd) {
        RunConfig c;
        c.command = cmd;
        c.output = (root / "out").string();
        return c;
    };
    std::vector<RunConfig> cfgs;
    {
        auto c = base("check-hypotheses");
        c.preset = "diag(1,1,1,1;1,2,3,4)";
        c.seed = 3;
        c.samples = 128;
        cfgs.push_back(c);
    }
    {
        auto c = base("transversality");
        c.preset = "parabola(2)";
        c.seed = 4;
        c.scales = {2};
        cfgs.push_back(c);
    }
    {
        auto c = base("bl-constant");
        c.params = {{"bases", {{{1.0, 0.0}}, {{0.5, 0.8660254037844386}}}}};
        cfgs.push_back(c);
    }
    {
        auto c = base("cap-select");
        c.preset = "parabola(2)";
        c.seed = 5;
        c.samples = 1;
        c.scales = {3};
        cfgs.push_back(c);
    }
    {
        auto c = base("variety-cover");
        c.params = {{"poly_file", (root / "cubic.json").string()}};
        c.scales = {12};
        cfgs.push_back(c);
    }
    {
        auto c = base("sublevel");
        c.params = {{"poly_file", (root / "cubic.json").string()}};
        c.seed = 6;
        c.samples = 500;
        cfgs.push_back(c);
    }
    {
        auto c = base("dec-estimate");
        c.preset = "parabola(1)";
        c.scales = {2};
        c.params = {{"family", "rescaled"}};
        cfgs.push_back(c);
    }
    {
        auto c = base("muldec-lhs");
        c.preset = "parabola(1)";
        c.scales = {2, 1};
        c.p = "4";
        c.params = {{"radius", 1.0}};
        cfgs.push_back(c);
    }
    {
        auto c = base("sharpness");
        c.preset = "parabola(1)";
        c.scales = {3, 6};
        cfgs.push_back(c);
    }
    {
        auto c = base("exponent-descent");
        c.params = {{"d", 2}, {"n", 1}, {"eta0", "2"}};
        cfgs.push_back(c);
    }
    std::vector<std::string> dirs;
    int identical = 0, total = 0;
    std::string bad;
    auto check = [&](const RunConfig& raw) {
        auto c = resolve_config(raw, root.string());
        auto a = run(c);
        std::ifstream fa(fs::path(a.run_dir) / "result.json");
        std::stringstream sa;
        sa << fa.rdbuf();
        auto b = run(c);
        std::ifstream fb(fs::path(b.run_dir) / "result.json");
        std::stringstream sb;
        sb << fb.rdbuf();
        ++total;
        if (sa.str() == sb.str() && a.digests == b.digests) ++identical;
        else bad += c.command + " ";
        return a.run_dir;
    };
    for (const auto& c : cfgs) dirs.push_back(check(c));
    auto rep = base("report");
    rep.inputs = dirs;
    check(rep);
    return {identical == total, fmt("%.0f/%.0f commands byte-identical", identical, total) + (bad.empty() ? "" : "; differing: " + bad)};
}

}  // namespace

int main() {
    report(1, diagonal_equivalence, 300);
    report(2, bl_closed_form, 60);
    report(3, bcct_equivalence, 600);
    report(4, sharpness_exponents, 1800);
    report(5, descent_arithmetic, 600);
    report(6, sublevel_covering, 600);
    report(7, variety_covers, 600);
    report(8, cap_selection, 1800);
    report(9, nesting, 1800);
    report(10, determinism, 600);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
