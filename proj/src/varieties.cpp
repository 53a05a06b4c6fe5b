#include "qdec/varieties.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qdec {

namespace {

struct DPoly {
    std::size_t nvars = 0;
    std::vector<std::pair<Multiindex, double>> terms;

    explicit DPoly(const MultiPoly& p) : nvars(p.nvars()) {
        for (const auto& [a, c] : p.terms()) terms.emplace_back(a, to_double(c));
    }
    double eval(const std::vector<double>& x) const {
        double s = 0.0;
        for (const auto& [a, c] : terms) {
            double m = c;
            for (std::size_t i = 0; i < nvars; ++i)
                for (unsigned e = 0; e < a[i]; ++e) m *= x[i];
            s += m;
        }
        return s;
    }
    std::vector<double> grad(const std::vector<double>& x) const {
        std::vector<double> g(nvars, 0.0);
        for (const auto& [a, c] : terms)
            for (std::size_t k = 0; k < nvars; ++k) {
                if (a[k] == 0) continue;
                double m = c * a[k];
                for (std::size_t i = 0; i < nvars; ++i)
                    for (unsigned e = 0; e < a[i] - (i == k ? 1u : 0u); ++e) m *= x[i];
                g[k] += m;
            }
        return g;
    }
    // Upper bound for |grad P| on the box where every |x_i| <= R (R >= 1).
    double lipschitz(double R) const {
        double L = 0.0;
        for (const auto& [a, c] : terms) {
            unsigned deg = total_degree(a);
            if (deg == 0) continue;
            L += std::fabs(c) * deg * std::pow(R, static_cast<double>(deg - 1));
        }
        return L;
    }
};

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

bool zero_near(const DPoly& P, const std::vector<double>& x, double max_dist, std::vector<double>& y) {
    y = x;
    double cap = std::max(max_dist / 4, 1e-12);
    for (int it = 0; it < 200; ++it) {
        double v = P.eval(y);
        if (std::fabs(v) <= 1e-14) return dist(x, y) <= max_dist;
        auto g = P.grad(y);
        double gg = 0.0;
        for (double t : g) gg += t * t;
        if (gg == 0.0) return false;
        double len = std::fabs(v) / std::sqrt(gg), f = len > cap ? cap / len : 1.0;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] -= f * v * g[i] / gg;
        if (dist(x, y) > 1.5 * max_dist) return false;
        if (f == 1.0 && len < 1e-16) break;
    }
    return std::fabs(P.eval(y)) <= 1e-12 && dist(x, y) <= max_dist;
}

long round_div(long num, long den) { return (2 * num + den) / (2 * den); }

long ipow(long b, long e) {
    long r = 1;
    for (long i = 0; i < e; ++i) r *= b;
    return r;
}

std::vector<SublevelPiece> derivative_chain(const MultiPoly& P, std::size_t D) {
    std::vector<SublevelPiece> pieces(D);
    if (D == 0) return pieces;
    Multiindex alpha(P.nvars(), 0);
    MultiPoly cur = P;
    pieces[D - 1] = {alpha, cur};
    for (std::size_t j = D - 1; j >= 1; --j) {
        std::size_t best = 0;
        Rational best_norm = -1;
        MultiPoly best_poly(P.nvars());
        for (std::size_t i = 0; i < P.nvars(); ++i) {
            Multiindex e(P.nvars(), 0);
            e[i] = 1;
            MultiPoly der = poly_partial(cur, e);
            Rational nrm = poly_norm1(der);
            if (nrm > best_norm) {
                best_norm = nrm;
                best = i;
                best_poly = der;
            }
        }
        ++alpha[best];
        cur = best_poly;
        pieces[j - 1] = {alpha, cur};
    }
    return pieces;
}

}  // namespace

double ScaleLadder::K(std::size_t j) const { return std::ldexp(1.0, exps.at(j - 1)); }

double ScaleLadder::radius(std::size_t j) const { return std::ldexp(1.0, -static_cast<int>(A) * exps.at(j - 1)); }

ScaleLadder scale_ladder(std::uint64_t K, long A, long D, LadderMode mode) {
    if (K < 2 || (K & (K - 1)) != 0) throw ValidationError("NOT_DYADIC", "K must be a power of two >= 2");
    if (A < 1) throw ValidationError("RANGE", "A must be at least 1");
    if (D < 0) throw ValidationError("RANGE", "D must be nonnegative");
    if (D > 12) throw ValidationError("RANGE", "D above 12 is not supported");
    long k = 0;
    while ((std::uint64_t{1} << k) < K) ++k;
    ScaleLadder L;
    L.D = D;
    L.A = A;
    L.mode = mode;
    L.c = Q(1, ipow(A + 1, D));
    for (long j = 1; j <= D + 1; ++j) L.exps.push_back(static_cast<int>(round_div(k, ipow(A + 1, D + 1 - j))));
    if (D == 0) return L;
    if (mode == LadderMode::LEMMA) {
        if (L.exps[0] < 1) throw Error("K_TOO_SMALL", "K_1 rounds below 2; increase K or decrease A, D");
        for (long j = 0; j < D; ++j) L.cube_exps.push_back(static_cast<int>(A * L.exps[static_cast<std::size_t>(j)]));
    } else {
        long lo = (k + ipow(A + 1, D) - 1) / ipow(A + 1, D), hi = k / 2;
        if (lo > hi) throw Error("K_TOO_SMALL", "the interval [K^c, sqrt K] contains no dyadic scale");
        for (long j = 0; j < D; ++j)
            L.cube_exps.push_back(static_cast<int>(std::clamp(A * L.exps[static_cast<std::size_t>(j)], lo, hi)));
    }
    for (long j = 0; j < D; ++j) {
        auto u = static_cast<std::size_t>(j);
        L.comparability = std::max(L.comparability, static_cast<int>(std::labs(L.exps[u + 1] - (A + 1) * L.exps[u])));
    }
    return L;
}

Rational hessian_constant(std::size_t nvars, std::size_t D) {
    if (D < 2) return 1;
    long bound = static_cast<long>(nvars * D * (D - 1)) * ipow(2, static_cast<long>(D) - 2);
    return Q(1, bound);
}

SublevelCertificate sublevel_decompose(const MultiPoly& P, const ScaleLadder& ladder) {
    if (poly_norm1(P) != 1) throw ValidationError("NOT_NORMALIZED", "coefficient l1 norm must be 1");
    auto D = static_cast<std::size_t>(ladder.D);
    if (P.degree() > D) throw ValidationError("DEGREE", "polynomial degree exceeds the ladder degree");
    SublevelCertificate cert;
    cert.D = D;
    cert.c0 = hessian_constant(P.nvars(), D);
    cert.c1 = Q(1, 2 * static_cast<long>(P.nvars()));
    if (D >= 1) {
        Rational best = 0;
        for (std::size_t i = 0; i < P.nvars(); ++i) {
            Multiindex e(P.nvars(), 0);
            e[i] = 1;
            best = std::max(best, poly_norm1(poly_partial(P, e)));
        }
        if (best < cert.c1) throw Error("ALL_DERIVATIVES_SMALL", "every first-order derivative has norm below c1");
    }
    cert.pieces = derivative_chain(P, D);
    return cert;
}

bool find_zero_near(const MultiPoly& P, const std::vector<double>& x, double max_dist, std::vector<double>& zero) {
    return zero_near(DPoly(P), x, max_dist, zero);
}

InclusionReport verify_sublevel_inclusion(const MultiPoly& P, const SublevelCertificate& cert, const ScaleLadder& ladder,
                                          std::size_t samples, std::uint64_t seed) {
    InclusionReport rep;
    rep.seed = seed;
    std::size_t d = P.nvars();
    DPoly p(P);
    double top = 1.0 / ladder.K(static_cast<std::size_t>(ladder.D) + 1);
    std::vector<DPoly> pieces;
    for (const auto& pc : cert.pieces) pieces.emplace_back(pc.poly);
    Rng rng(seed);
    std::size_t max_proposals = 200 * std::max<std::size_t>(samples, 1);
    std::vector<double> x(d), y, z(d), w;
    while (rep.samples < samples && rep.proposals < max_proposals) {
        ++rep.proposals;
        double r2;
        do {
            r2 = 0.0;
            for (auto& t : x) {
                t = uniform(rng, -1, 1);
                r2 += t * t;
            }
        } while (r2 >= 1.0);
        if (!zero_near(p, x, 2.0, y)) continue;
        auto g = p.grad(y);
        double gg = 0.0;
        for (double t : g) gg += t * t;
        if (gg == 0.0) continue;
        double s = uniform(rng, -1, 1) * top;
        for (std::size_t i = 0; i < d; ++i) z[i] = y[i] + s * g[i] / gg;
        if (norm2(z) >= 1.0 || std::fabs(p.eval(z)) >= top) continue;
        ++rep.samples;
        bool ok = false;
        for (std::size_t j = pieces.size(); j >= 1 && !ok; --j) {
            double r = ladder.radius(j);
            if (!zero_near(pieces[j - 1], z, r + r / 10, w)) continue;
            ok = norm2(pieces[j - 1].grad(w)) >= 1.0 / ladder.K(j);
        }
        if (!ok) {
            ++rep.violations;
            if (rep.violating_points.size() < 10) rep.violating_points.push_back(z);
        }
    }
    rep.vacuous = rep.samples == 0;
    return rep;
}

namespace {

using Index = std::vector<std::int64_t>;

// Conservative test whether |P| < thr somewhere in the box [lo, hi].
bool box_may_meet(const DPoly& P, std::vector<double> lo, std::vector<double> hi, double thr, double min_side) {
    std::size_t d = lo.size();
    std::vector<double> c(d);
    double R = 1.0, hd = 0.0, side = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        c[i] = 0.5 * (lo[i] + hi[i]);
        R = std::max({R, std::fabs(lo[i]), std::fabs(hi[i])});
        hd += 0.25 * (hi[i] - lo[i]) * (hi[i] - lo[i]);
        side = std::max(side, hi[i] - lo[i]);
    }
    double v = std::fabs(P.eval(c));
    if (v < thr) return true;
    if (v - P.lipschitz(R) * std::sqrt(hd) * (1 + 1e-9) >= thr) return false;
    if (side <= min_side) return true;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        std::vector<double> a(d), b(d);
        for (std::size_t i = 0; i < d; ++i) {
            bool up = mask >> i & 1;
            a[i] = up ? c[i] : lo[i];
            b[i] = up ? hi[i] : c[i];
        }
        if (box_may_meet(P, a, b, thr, min_side)) return true;
    }
    return false;
}

struct LayerBuilder {
    const DPoly& P;
    const DPoly& top;
    double top_thr;
    double floor;
    int level;
    int dilation;
    int resolution;
    std::size_t d;
    std::vector<Index> found;

    bool cube_meets(const Index& idx) const {
        double s = std::ldexp(1.0, -level);
        int per_side = dilation * resolution + 1;
        std::size_t total = 1;
        for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_side);
        std::vector<double> vals(total);
        std::vector<std::vector<double>> pts(total, std::vector<double>(d));
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t r = flat;
            for (std::size_t i = 0; i < d; ++i) {
                auto m = static_cast<double>(r % static_cast<std::size_t>(per_side));
                r /= static_cast<std::size_t>(per_side);
                pts[flat][i] = (static_cast<double>(idx[i]) + 0.5 - dilation / 2.0 + m / resolution) * s;
            }
            vals[flat] = P.eval(pts[flat]);
        }
        std::vector<double> y(d);
        for (std::size_t flat = 0; flat < total; ++flat) {
            if (vals[flat] == 0.0 && norm2(P.grad(pts[flat])) >= floor) return true;
            std::size_t stride = 1;
            for (std::size_t i = 0; i < d; ++i) {
                auto coord = (flat / stride) % static_cast<std::size_t>(per_side);
                if (coord + 1 < static_cast<std::size_t>(per_side)) {
                    std::size_t nb = flat + stride;
                    if (vals[flat] * vals[nb] < 0.0) {
                        std::vector<double> a = pts[flat], b = pts[nb];
                        double fa = vals[flat];
                        for (int it = 0; it < 60; ++it) {
                            for (std::size_t k = 0; k < d; ++k) y[k] = 0.5 * (a[k] + b[k]);
                            double fy = P.eval(y);
                            if (fy == 0.0) break;
                            if ((fy < 0) == (fa < 0)) {
                                a = y;
                                fa = fy;
                            } else {
                                b = y;
                            }
                        }
                        if (norm2(P.grad(y)) >= floor) return true;
                    }
                }
                stride *= static_cast<std::size_t>(per_side);
            }
        }
        return false;
    }

    void descend(const Index& idx, int lvl) {
        double s = std::ldexp(1.0, -lvl), target = std::ldexp(1.0, -level);
        double margin = (dilation - 1) / 2.0 * target;
        std::vector<double> c(d);
        double R = 1.0, half_diag = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double lo = static_cast<double>(idx[i]) * s - margin, hi = static_cast<double>(idx[i] + 1) * s + margin;
            c[i] = 0.5 * (lo + hi);
            R = std::max({R, std::fabs(lo), std::fabs(hi)});
            half_diag += 0.25 * (hi - lo) * (hi - lo);
        }
        half_diag = std::sqrt(half_diag);
        if (std::fabs(P.eval(c)) > P.lipschitz(R) * half_diag * (1 + 1e-9)) return;
        if (lvl == level) {
            std::vector<double> lo(d), hi(d);
            for (std::size_t i = 0; i < d; ++i) {
                lo[i] = static_cast<double>(idx[i]) * s - margin;
                hi[i] = static_cast<double>(idx[i] + 1) * s + margin;
            }
            if (box_may_meet(top, lo, hi, top_thr, s / 64) && cube_meets(idx)) found.push_back(idx);
            return;
        }
        for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
            Index child(d);
            for (std::size_t i = 0; i < d; ++i) child[i] = 2 * idx[i] + static_cast<std::int64_t>(mask >> i & 1);
            descend(child, lvl + 1);
        }
    }
};

}  // namespace

bool CubeCover::covers(const std::vector<double>& x) const {
    for (const auto& layer : layers) {
        std::int64_t n = std::int64_t{1} << layer.level;
        std::vector<std::vector<std::int64_t>> options(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double u = std::ldexp(x[i], layer.level);
            auto f = static_cast<std::int64_t>(std::floor(u));
            for (auto cand : {f, f - 1})
                if (cand >= 0 && cand < n && static_cast<double>(cand) <= u && u <= static_cast<double>(cand + 1))
                    options[i].push_back(cand);
            if (options[i].empty()) return false;
        }
        Index idx(x.size());
        std::size_t combos = 1;
        for (const auto& o : options) combos *= o.size();
        for (std::size_t m = 0; m < combos; ++m) {
            std::size_t r = m;
            for (std::size_t i = 0; i < x.size(); ++i) {
                idx[i] = options[i][r % options[i].size()];
                r /= options[i].size();
            }
            if (std::binary_search(layer.cubes.begin(), layer.cubes.end(), idx)) return true;
        }
    }
    return false;
}

CubeCover variety_cube_cover(const MultiPoly& P, std::uint64_t K, long A, std::size_t d, const CoverOptions& opts) {
    if (P.is_zero()) throw ValidationError("ZERO_POLYNOMIAL", "P must be nonzero");
    if (P.nvars() != d) throw ValidationError("SHAPE", "polynomial variable count differs from d");
    MultiPoly normalized = P * (1 / poly_norm1(P));
    CubeCover cover;
    cover.ladder = scale_ladder(K, A, static_cast<long>(P.degree()), opts.mode);
    cover.chain.D = P.degree();
    cover.chain.c0 = hessian_constant(d, cover.chain.D);
    cover.chain.c1 = Q(1, 2 * static_cast<long>(d));
    cover.chain.pieces = derivative_chain(normalized, cover.chain.D);
    DPoly top(normalized);
    double top_thr = top.lipschitz(1.0 + opts.dilation) / static_cast<double>(K);
    std::vector<std::set<Index>> earlier;
    std::vector<int> earlier_levels;
    for (std::size_t j = 1; j <= cover.chain.D; ++j) {
        DPoly piece(cover.chain.pieces[j - 1].poly);
        CubeLayer layer;
        layer.level = cover.ladder.cube_exps[j - 1];
        if (cover.chain.pieces[j - 1].poly.degree() > 0) {
            LayerBuilder b{piece, top, top_thr, 1.0 / cover.ladder.K(j), layer.level, opts.dilation, opts.resolution, d, {}};
            b.descend(Index(d, 0), 0);
            for (auto& idx : b.found) {
                bool inside = false;
                for (std::size_t e = 0; e < earlier.size() && !inside; ++e) {
                    int shift = layer.level - earlier_levels[e];
                    if (shift < 0) continue;
                    Index anc(d);
                    for (std::size_t i = 0; i < d; ++i) anc[i] = idx[i] >> shift;
                    inside = earlier[e].count(anc) > 0;
                }
                if (!inside) layer.cubes.push_back(idx);
            }
            std::sort(layer.cubes.begin(), layer.cubes.end());
        }
        earlier.emplace_back(layer.cubes.begin(), layer.cubes.end());
        earlier_levels.push_back(layer.level);
        cover.layers.push_back(std::move(layer));
    }
    return cover;
}

std::vector<std::vector<double>> sample_zero_neighborhood(const MultiPoly& P, double K, std::size_t count, std::uint64_t seed) {
    DPoly p(P);
    std::size_t d = P.nvars();
    Rng rng(seed);
    std::vector<std::vector<double>> out;
    std::vector<double> x(d), z, u(d);
    for (std::size_t attempt = 0; attempt < 50 * count + 5000 && out.size() < count; ++attempt) {
        if (attempt == 5000 && out.empty()) break;
        for (auto& t : x) t = uniform01(rng);
        if (!zero_near(p, x, 2.0, z)) continue;
        double len = 0.0;
        for (auto& t : u) {
            t = normal(rng);
            len += t * t;
        }
        len = std::sqrt(len);
        double r = uniform01(rng) * 0.999 / K;
        bool inside = true;
        std::vector<double> pt(d);
        for (std::size_t i = 0; i < d; ++i) {
            pt[i] = z[i] + r * u[i] / len;
            if (pt[i] < 0.0 || pt[i] > 1.0) inside = false;
        }
        if (inside) out.push_back(std::move(pt));
    }
    return out;
}

nlohmann::json ladder_to_json(const ScaleLadder& L) {
    return {{"D", L.D},
            {"A", L.A},
            {"mode", L.mode == LadderMode::LEMMA ? "lemma" : "corollary"},
            {"log2_K", L.exps},
            {"log2_cube_scale", L.cube_exps},
            {"c", to_string(L.c)},
            {"log2_comparability", L.comparability}};
}

nlohmann::json certificate_to_json(const SublevelCertificate& c) {
    nlohmann::json pieces = nlohmann::json::array();
    for (std::size_t j = 0; j < c.pieces.size(); ++j)
        pieces.push_back({{"j", j + 1}, {"alpha", c.pieces[j].alpha}, {"poly", poly_to_json(c.pieces[j].poly)}});
    return {{"D", c.D}, {"c0", to_string(c.c0)}, {"c1", to_string(c.c1)}, {"pieces", pieces}};
}

nlohmann::json report_to_json(const InclusionReport& r) {
    return {{"samples", r.samples},   {"proposals", r.proposals}, {"violations", r.violations},
            {"vacuous", r.vacuous},   {"seed", r.seed},           {"violating_points", r.violating_points}};
}

nlohmann::json cover_to_json(const CubeCover& c) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t j = 0; j < c.layers.size(); ++j)
        layers.push_back({{"j", j + 1}, {"log2_inverse_side", c.layers[j].level}, {"cubes", c.layers[j].cubes}});
    return {{"ladder", ladder_to_json(c.ladder)}, {"chain", certificate_to_json(c.chain)}, {"layers", layers}};
}

}  // namespace qdec
