#include "qdec/decnum.hpp"

#include "qdec/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace qdec {

WeightSpec WeightSpec::make(std::vector<double> center, double radius, std::size_t d, std::size_t n) {
    return WeightSpec{std::move(center), radius, 10.0 * static_cast<double>(d + n)};
}

double weight_eval(const WeightSpec& W, const std::vector<double>& x) {
    if (x.size() != W.center.size()) throw ValidationError("SHAPE", "point dimension differs from the weight center");
    if (!(W.radius > 0) || !(W.E > 0)) throw ValidationError("RANGE", "weight radius and exponent must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - W.center[i]) * (x[i] - W.center[i]);
    return std::pow(1.0 + std::sqrt(s) / W.radius, -W.E);
}

double GridFunction::spacing() const { return std::ldexp(1.0, -spacing_level); }

std::size_t GridFunction::per_side() const { return std::size_t{1} << (spacing_level - domain.level); }

GridFunction sample_grid(const Cap& domain, int spacing_level, const std::function<Complex(const std::vector<double>&)>& g) {
    if (spacing_level < domain.level) throw ValidationError("SPACING", "grid spacing must divide the domain side");
    if (spacing_level - domain.level > 24) throw ValidationError("SPACING", "grid too fine");
    GridFunction out;
    out.domain = domain;
    out.spacing_level = spacing_level;
    std::size_t d = domain.anchor.size(), m = out.per_side(), total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= m;
    double h = out.spacing();
    auto anchor = domain.anchor;
    std::vector<double> t(d);
    out.samples.resize(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        for (std::size_t i = 0; i < d; ++i) {
            t[i] = to_double(anchor[i]) + (static_cast<double>(r % m) + 0.5) * h;
            r /= m;
        }
        out.samples[flat] = g(t);
        if (!std::isfinite(out.samples[flat].real()) || !std::isfinite(out.samples[flat].imag()))
            throw ValidationError("NOT_FINITE", "grid samples must be finite");
    }
    return out;
}

ExtensionValue extension_eval(const QuadTuple& T, const GridFunction& g, const Cap& R, const std::vector<double>& x) {
    std::size_t d = T.d;
    if (x.size() != T.d + T.n) throw ValidationError("SHAPE", "x must have d+n coordinates");
    if (R.anchor.size() != d || g.domain.anchor.size() != d) throw ValidationError("SHAPE", "cube dimension differs from d");
    if (!g.domain.contains(R)) throw ValidationError("DOMAIN", "R must lie inside the grid domain");
    if (R.level > g.spacing_level) throw ValidationError("SPACING", "R is finer than the grid spacing");
    double xnorm = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("NOT_FINITE", "x must be finite");
        xnorm += v * v;
    }
    xnorm = std::sqrt(xnorm);
    double h = g.spacing();
    if (h > 1.0 / (8.0 * (1.0 + xnorm)))
        throw Error("SPACING_TOO_COARSE", "grid spacing exceeds 1/(8(1+|x|)) for this x; refine the grid");
    std::size_t m = g.per_side(), sub = std::size_t{1} << (g.spacing_level - R.level), total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= sub;
    std::vector<std::size_t> offset(d);
    for (std::size_t i = 0; i < d; ++i) {
        Rational o = (R.anchor[i] - g.domain.anchor[i]) * dyadic(-g.spacing_level);
        offset[i] = o.get_num().get_ui();
    }
    // gradient bound of the phase for the error estimate
    double gradP = 0.0;
    for (const auto& M : T.forms) {
        double s = 0.0;
        for (std::size_t i = 0; i < M.rows(); ++i)
            for (std::size_t j = 0; j < M.cols(); ++j) s += std::fabs(to_double(M(i, j)));
        gradP = std::max(gradP, 2 * s);
    }
    double freq = 0.0;
    for (std::size_t i = 0; i < d; ++i) freq += std::fabs(x[i]);
    for (std::size_t j = 0; j < T.n; ++j) freq += std::fabs(x[d + j]) * gradP;
    double gmax = 0.0;
    Complex sum = 0.0;
    std::vector<double> t(d);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat, idx = 0, stride = 1;
        for (std::size_t i = 0; i < d; ++i) {
            std::size_t c = offset[i] + r % sub;
            r /= sub;
            t[i] = to_double(g.domain.anchor[i]) + (static_cast<double>(c) + 0.5) * h;
            idx += c * stride;
            stride *= m;
        }
        auto P = T.eval_all(t);
        double phase = 0.0;
        for (std::size_t i = 0; i < d; ++i) phase += t[i] * x[i];
        for (std::size_t j = 0; j < T.n; ++j) phase += P[j] * x[d + j];
        const Complex& gv = g.samples[idx];
        gmax = std::max(gmax, std::abs(gv));
        sum += gv * std::polar(1.0, 2 * M_PI * phase);
    }
    double vol = std::pow(h, static_cast<double>(d));
    ExtensionValue out;
    out.value = sum * vol;
    double twopi_f = 2 * M_PI * freq;
    out.error_bound = static_cast<double>(total) * vol * gmax * h * h / 24.0 * (twopi_f * twopi_f + 2 * M_PI * gradP * static_cast<double>(T.n));
    return out;
}

namespace {

struct Geom {
    Eigen::MatrixXd A, B, C, Ainv, Cinv, AinvB;
    std::vector<double> x_half;
};

struct Layout {
    std::size_t d = 0, n = 0;
    std::vector<double> window;  // truncation of (M z)_i
    std::vector<double> h;
    std::vector<long> jlo, jhi;
    std::vector<Geom> geom;
    std::vector<std::size_t> subset;
    bool exact = false;
};

Geom make_geom(const WavePacket& pk, std::size_t d, std::size_t n, const std::vector<double>& window) {
    std::size_t D = d + n;
    Eigen::MatrixXd M(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pk.M[i][j];
    auto di = static_cast<Eigen::Index>(d), ni = static_cast<Eigen::Index>(n);
    if (n > 0 && d > 0 && M.block(di, 0, ni, di).cwiseAbs().maxCoeff() != 0.0)
        throw Error("UNSUPPORTED", "packet matrices must be block upper triangular");
    Geom g;
    g.A = M.block(0, 0, di, di);
    g.B = M.block(0, di, di, ni);
    g.C = M.block(di, di, ni, ni);
    g.Ainv = g.A.inverse();
    g.Cinv = n > 0 ? Eigen::MatrixXd(g.C.inverse()) : Eigen::MatrixXd(0, 0);
    g.AinvB = g.Ainv * g.B;
    g.x_half.assign(d, 0.0);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < d; ++j) g.x_half[k] += std::fabs(g.Ainv(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))) * window[j];
    return g;
}

Layout make_layout(const PacketFamily& fam, const std::vector<std::size_t>& subset, double p, const WeightSpec* W,
                   const QuadratureConfig& cfg, double pad = 0.0) {
    Layout L;
    L.d = fam.d;
    L.n = fam.n;
    std::size_t D = fam.dim();
    L.subset = subset;
    for (std::size_t i = 0; i < D; ++i) L.window.push_back(cfg.lobes * fam.bumps[i].first_zero());
    std::vector<double> half(D, 0.0);
    for (auto idx : subset) {
        const auto& pk = fam.packets.at(idx);
        L.geom.push_back(make_geom(pk, fam.d, fam.n, L.window));
        const auto& g = L.geom.back();
        std::vector<double> yh(fam.n, 0.0);
        for (std::size_t k = 0; k < fam.n; ++k) {
            for (std::size_t j = 0; j < fam.n; ++j)
                yh[k] += std::fabs(g.Cinv(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))) * L.window[fam.d + j];
            half[fam.d + k] = std::max(half[fam.d + k], yh[k]);
        }
        for (std::size_t k = 0; k < fam.d; ++k) {
            double xh = g.x_half[k];
            for (std::size_t j = 0; j < fam.n; ++j)
                xh += std::fabs(g.AinvB(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))) * yh[j];
            half[k] = std::max(half[k], xh);
        }
    }
    unsigned m = static_cast<unsigned>(std::ceil(p / 2.0));
    bool even = std::floor(p / 2.0) * 2.0 == p;
    if (!cfg.spacing.empty()) {
        if (cfg.spacing.size() != D) throw ValidationError("SHAPE", "spacing needs one entry per coordinate");
        L.h = cfg.spacing;
    } else {
        for (std::size_t k = 0; k < D; ++k) {
            double lo = INFINITY, hi = -INFINITY, pw = 0.0;
            for (auto idx : subset) {
                const auto& pk = fam.packets[idx];
                lo = std::min(lo, pk.freq[k]);
                hi = std::max(hi, pk.freq[k]);
                double w = 0.0;
                for (std::size_t r = 0; r < D; ++r) w += std::fabs(pk.M[r][k]) * fam.bumps[r].c;
                pw = std::max(pw, w);
            }
            double hw = (hi - lo) / 2 + pw;
            double h = 0.999 / (2.0 * m * hw);
            if (W) h = std::min(h, cfg.max_spacing);
            L.h.push_back(h);
        }
    }
    L.exact = !W && even && cfg.spacing.empty();
    for (std::size_t k = 0; k < D; ++k) {
        double lo = -half[k] - pad, hi = half[k] + pad;
        if (W) {
            lo = std::max(lo, W->center[k] - cfg.weight_truncation * W->radius);
            hi = std::min(hi, W->center[k] + cfg.weight_truncation * W->radius);
        }
        L.jlo.push_back(static_cast<long>(std::ceil(lo / L.h[k])));
        L.jhi.push_back(static_cast<long>(std::floor(hi / L.h[k])));
    }
    return L;
}

double power_of(const Complex& F, double p, bool even) {
    double a2 = std::norm(F);
    if (even) {
        double r = 1.0;
        for (int e = 0; e < static_cast<int>(p / 2); ++e) r *= a2;
        return r;
    }
    return std::pow(a2, p / 2);
}

double sinc8(double s, double S) {
    if (std::fabs(s) < 1e-8) return 1.0;
    double r = S / s;
    r *= r;
    r *= r;
    return r * r;
}

struct LineResult {
    double sum = 0.0;
    std::size_t points = 0;
};

LineResult integrate_line(const PacketFamily& fam, const Layout& L, std::size_t yflat, double p, const WeightSpec* W) {
    std::size_t d = L.d, n = L.n;
    std::vector<double> y(n);
    {
        std::size_t r = yflat;
        for (std::size_t k = 0; k < n; ++k) {
            auto cnt = static_cast<std::size_t>(L.jhi[d + k] - L.jlo[d + k] + 1);
            y[k] = static_cast<double>(L.jlo[d + k] + static_cast<long>(r % cnt)) * L.h[d + k];
            r /= cnt;
        }
    }
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    struct Active {
        std::size_t g;
        double pv;
        double phase0;
        std::vector<long> lo, hi;
    };
    std::vector<Active> act;
    std::vector<long> ulo(d, 0), uhi(d, -1);
    bool any = false;
    for (std::size_t gi = 0; gi < L.geom.size(); ++gi) {
        const auto& g = L.geom[gi];
        const auto& pk = fam.packets[L.subset[gi]];
        Eigen::VectorXd v = g.C * yv;
        double pv = 1.0;
        bool inside = true;
        for (std::size_t i = 0; i < n; ++i) {
            double vi = v(static_cast<Eigen::Index>(i));
            if (std::fabs(vi) > L.window[d + i]) {
                inside = false;
                break;
            }
            pv *= fam.bumps[d + i](vi);
        }
        if (!inside) continue;
        Eigen::VectorXd xc = -(g.AinvB * yv);
        Active a{gi, pv, 0.0, std::vector<long>(d), std::vector<long>(d)};
        for (std::size_t j = 0; j < n; ++j) a.phase0 += pk.freq[d + j] * y[j];
        bool empty = false;
        for (std::size_t k = 0; k < d; ++k) {
            double c = xc(static_cast<Eigen::Index>(k));
            a.lo[k] = std::max(L.jlo[k], static_cast<long>(std::ceil((c - g.x_half[k]) / L.h[k])));
            a.hi[k] = std::min(L.jhi[k], static_cast<long>(std::floor((c + g.x_half[k]) / L.h[k])));
            if (a.lo[k] > a.hi[k]) empty = true;
        }
        if (empty) continue;
        for (std::size_t k = 0; k < d; ++k) {
            ulo[k] = any ? std::min(ulo[k], a.lo[k]) : a.lo[k];
            uhi[k] = any ? std::max(uhi[k], a.hi[k]) : a.hi[k];
        }
        any = true;
        act.push_back(std::move(a));
    }
    LineResult res;
    if (!any) return res;
    std::vector<std::size_t> cnt(d), stride(d);
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
        cnt[k] = static_cast<std::size_t>(uhi[k] - ulo[k] + 1);
        stride[k] = total;
        total *= cnt[k];
    }
    std::vector<Complex> F(total, Complex(0.0, 0.0));
    std::vector<double> x(d), u(d), du(d), s(d), ds(d), S(d), Cc(d), rc(d), rs(d), pib(d);
    for (std::size_t i = 0; i < d; ++i) pib[i] = M_PI * fam.bumps[i].c / 4.0;
    for (const auto& a : act) {
        const auto& g = L.geom[a.g];
        const auto& pk = fam.packets[L.subset[a.g]];
        std::size_t outer = 1;
        for (std::size_t k = 1; k < d; ++k) outer *= static_cast<std::size_t>(a.hi[k] - a.lo[k] + 1);
        for (std::size_t o = 0; o < outer; ++o) {
            std::size_t r = o, base = 0;
            for (std::size_t k = 1; k < d; ++k) {
                auto span = static_cast<std::size_t>(a.hi[k] - a.lo[k] + 1);
                long j = a.lo[k] + static_cast<long>(r % span);
                r /= span;
                x[k] = static_cast<double>(j) * L.h[k];
                base += static_cast<std::size_t>(j - ulo[k]) * stride[k];
            }
            long j0 = a.lo[0];
            x[0] = static_cast<double>(j0) * L.h[0];
            for (std::size_t i = 0; i < d; ++i) {
                double ui = 0.0;
                for (std::size_t k = 0; k < d; ++k) ui += g.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * x[k];
                for (std::size_t k = 0; k < n; ++k) ui += g.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * y[k];
                u[i] = ui;
                du[i] = g.A(static_cast<Eigen::Index>(i), 0) * L.h[0];
                s[i] = pib[i] * u[i];
                ds[i] = pib[i] * du[i];
                rc[i] = std::cos(ds[i]);
                rs[i] = std::sin(ds[i]);
            }
            double phase = a.phase0;
            for (std::size_t k = 0; k < d; ++k) phase += pk.freq[k] * x[k];
            Complex z(0.0, 0.0), rot = std::polar(1.0, 2 * M_PI * pk.freq[0] * L.h[0]);
            std::size_t pos = base + static_cast<std::size_t>(j0 - ulo[0]);
            long steps = a.hi[0] - j0 + 1;
            for (long t = 0; t < steps; ++t) {
                if (t % 256 == 0) {
                    double xt = static_cast<double>(j0 + t) * L.h[0];
                    z = std::polar(a.pv, 2 * M_PI * (phase + pk.freq[0] * (xt - x[0])));
                    for (std::size_t i = 0; i < d; ++i) {
                        double ui = u[i] + du[i] * static_cast<double>(t);
                        s[i] = pib[i] * ui;
                        S[i] = std::sin(s[i]);
                        Cc[i] = std::cos(s[i]);
                    }
                }
                double amp = 1.0;
                bool inside = true;
                for (std::size_t i = 0; i < d; ++i) {
                    if (std::fabs(s[i]) > pib[i] * L.window[i] * (1 + 1e-12)) inside = false;
                    amp *= sinc8(s[i], S[i]);
                }
                if (inside) F[pos] += z * amp;
                ++pos;
                z *= rot;
                for (std::size_t i = 0; i < d; ++i) {
                    double ns = S[i] * rc[i] + Cc[i] * rs[i];
                    Cc[i] = Cc[i] * rc[i] - S[i] * rs[i];
                    S[i] = ns;
                    s[i] += ds[i];
                }
            }
        }
    }
    bool even = std::floor(p / 2.0) * 2.0 == p;
    std::vector<double> z(d + n);
    for (std::size_t k = 0; k < n; ++k) z[d + k] = y[k];
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (F[flat] == Complex(0.0, 0.0)) continue;
        double v = power_of(F[flat], p, even);
        if (W) {
            std::size_t r = flat;
            for (std::size_t k = 0; k < d; ++k) {
                z[k] = static_cast<double>(ulo[k] + static_cast<long>(r % cnt[k])) * L.h[k];
                r /= cnt[k];
            }
            v *= weight_eval(*W, z);
        }
        res.sum += v;
    }
    res.points = total;
    return res;
}

double tail_envelope(double lobes) { return std::pow(M_PI * lobes, -8.0); }

}  // namespace

LatticeReport lattice_power_integral(const PacketFamily& fam, const std::vector<std::size_t>& subset, double p,
                                     const WeightSpec* W, const QuadratureConfig& cfg) {
    if (!(p >= 1)) throw ValidationError("RANGE", "p must be at least 1");
    if (W && W->center.size() != fam.dim()) throw ValidationError("SHAPE", "weight center must have d+n coordinates");
    if (fam.d == 0) throw ValidationError("SHAPE", "family needs d >= 1");
    LatticeReport rep;
    rep.tail_bound = tail_envelope(cfg.lobes);
    if (subset.empty()) return rep;
    auto L = make_layout(fam, subset, p, W, cfg);
    rep.spacing = L.h;
    rep.exact_lattice = L.exact;
    std::size_t lines = 1;
    for (std::size_t k = 0; k < fam.n; ++k) {
        long c = L.jhi[fam.d + k] - L.jlo[fam.d + k] + 1;
        if (c <= 0) return rep;
        lines *= static_cast<std::size_t>(c);
    }
    for (std::size_t k = 0; k < fam.d; ++k)
        if (L.jhi[k] < L.jlo[k]) return rep;
    std::vector<LineResult> out(lines);
    parallel_for(lines, [&](std::size_t i) { out[i] = integrate_line(fam, L, i, p, W); });
    double vol = 1.0;
    for (double h : L.h) vol *= h;
    for (const auto& r : out) {
        rep.integral += r.sum;
        rep.points += r.points;
    }
    rep.integral *= vol;
    return rep;
}

double packet_norm(const PacketFamily& fam, std::size_t i, double p) {
    const auto& pk = fam.packets.at(i);
    std::size_t D = fam.dim();
    Eigen::MatrixXd M(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
    for (std::size_t r = 0; r < D; ++r)
        for (std::size_t c = 0; c < D; ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pk.M[r][c];
    double norm = std::pow(std::fabs(M.determinant()), -1.0 / p);
    for (const auto& b : fam.bumps) norm *= b.lp_norm(p);
    return norm;
}

namespace {

void check_ceiling(RatioReport& r, double q) {
    r.ceiling = std::pow(static_cast<double>(r.pieces), 1.0 - 1.0 / q);
    if (r.ratio > r.ceiling * (1 + 1e-6))
        throw Error("QUADRATURE_INCONSISTENT", "ratio exceeds the triangle inequality bound; refine the quadrature");
}

}  // namespace

RatioReport dec_ratio(const PacketFamily& fam, double p, double q, const WeightSpec* W, const QuadratureConfig& cfg) {
    if (fam.packets.empty()) throw ValidationError("EMPTY_FAMILY", "the family has no pieces");
    if (!(p >= 2) || !(q >= 1)) throw ValidationError("RANGE", "need p >= 2 and q >= 1");
    std::vector<std::size_t> all(fam.packets.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    RatioReport r;
    r.pieces = all.size();
    auto num = lattice_power_integral(fam, all, p, W, cfg);
    r.points = num.points;
    r.tail_bound = num.tail_bound;
    r.numerator = std::pow(num.integral, 1.0 / p);
    double den = 0.0;
    if (!W) {
        r.method = num.exact_lattice ? "lattice-exact" : "lattice";
        for (std::size_t i = 0; i < all.size(); ++i) den += std::pow(packet_norm(fam, i, p), q);
    } else {
        r.method = "lattice-weighted";
        for (std::size_t i = 0; i < all.size(); ++i) {
            auto one = lattice_power_integral(fam, {i}, p, W, cfg);
            r.points += one.points;
            den += std::pow(one.integral, q / p);
        }
    }
    r.denominator = std::pow(den, 1.0 / q);
    r.ratio = r.numerator / r.denominator;
    check_ceiling(r, q);
    return r;
}

RatioReport dec_ratio_energy(const PacketFamily& fam, unsigned p, double q) {
    if (fam.kind != "modulated" || fam.energy_keys.empty()) throw ValidationError("FAMILY", "energy method needs a modulated family");
    if (p < 2 || p % 2 != 0) throw ValidationError("RANGE", "energy method needs an even integer p");
    unsigned m = p / 2;
    for (const auto& b : fam.bumps)
        if (!(Rational(b.c) * m < fam.key_spacing_bound))
            throw Error("BUMP_TOO_WIDE", "bump spectrum too wide for the energy identity; need radius < " +
                                             to_string(fam.key_spacing_bound / m));
    std::size_t N = fam.packets.size(), D = fam.key_dim;
    std::vector<std::int64_t> mn(D, INT64_MAX), mx(D, INT64_MIN);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < D; ++k) {
            mn[k] = std::min(mn[k], fam.energy_keys[i * D + k]);
            mx[k] = std::max(mx[k], fam.energy_keys[i * D + k]);
        }
    std::vector<std::int64_t> enc(N, 0);
    long double range = 1;
    std::int64_t stride = 1;
    for (std::size_t k = 0; k < D; ++k) {
        std::int64_t radix = static_cast<std::int64_t>(m) * (mx[k] - mn[k]) + 1;
        range *= static_cast<long double>(radix);
        if (range > 4e18L) throw Error("TOO_LARGE", "frequency keys exceed the 64-bit encoding");
        for (std::size_t i = 0; i < N; ++i) enc[i] += (fam.energy_keys[i * D + k] - mn[k]) * stride;
        stride *= radix;
    }
    std::unordered_map<std::int64_t, std::uint64_t> cur;
    for (auto e : enc) ++cur[e];
    for (unsigned step = 1; step < m; ++step) {
        std::unordered_map<std::int64_t, std::uint64_t> next;
        next.reserve(cur.size() * 4);
        for (const auto& [s, c] : cur)
            for (auto e : enc) next[s + e] += c;
        cur.swap(next);
    }
    long double energy = 0;
    for (const auto& kv : cur) energy += static_cast<long double>(kv.second) * static_cast<long double>(kv.second);
    RatioReport r;
    r.pieces = N;
    r.method = "energy";
    double eta = packet_norm(fam, 0, p);
    r.numerator = std::pow(static_cast<double>(energy), 1.0 / p) * eta;
    r.denominator = std::pow(static_cast<double>(N), 1.0 / q) * eta;
    r.ratio = r.numerator / r.denominator;
    check_ceiling(r, q);
    return r;
}

Rational lower_bound_exponent(long d, long n, const Rational& p, const Rational& q) {
    if (p < 2 || q < 2) throw ValidationError("RANGE", "need 2 <= p, q");
    if (d < 1 || n < 0) throw ValidationError("RANGE", "need d >= 1, n >= 0");
    Rational a = Rational(d) - Rational(d) / q - Rational(d + 2 * n) / p;
    Rational b = Rational(d) * (Q(1, 2) - 1 / q);
    return std::max(a, b);
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& table) {
    if (table.size() < 3) throw ValidationError("TOO_FEW_POINTS", "need at least 3 scales");
    ExponentFit f;
    f.table = table;
    std::vector<double> xs, ys;
    for (const auto& [delta, r] : table) {
        int e;
        double mant = std::frexp(delta, &e);
        if (!(delta > 0 && delta <= 1) || mant != 0.5) throw ValidationError("NOT_DYADIC", "scales must be dyadic in (0,1]");
        if (!(r > 0) || !std::isfinite(r)) throw ValidationError("RANGE", "ratios must be positive and finite");
        xs.push_back(std::log(1.0 / delta));
        ys.push_back(std::log(r));
    }
    auto n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0) throw ValidationError("TOO_FEW_POINTS", "need at least 3 distinct scales");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - f.intercept - f.slope * xs[i];
        sse += e * e;
    }
    f.stderr_slope = std::sqrt(std::max(0.0, sse / (n - 2) / sxx));
    f.r2 = syy > 0 ? 1 - sse / syy : 1.0;
    return f;
}

MuldecReport muldec_lhs(const PacketFamily& fam, const std::vector<Cap>& R, std::uint64_t K, double p, const QuadratureConfig& cfg) {
    if (K < 1 || (K & (K - 1)) != 0) throw ValidationError("NOT_DYADIC", "K must be a power of two");
    if (R.empty()) throw ValidationError("EMPTY_CAPS", "need at least one cap");
    if (!(p >= 2)) throw ValidationError("RANGE", "need p >= 2");
    int level = 0;
    while ((std::uint64_t{1} << level) < K) ++level;
    double caps_bound = std::pow(static_cast<double>(K), static_cast<double>(fam.d));
    if (static_cast<double>(R.size()) > caps_bound) throw ValidationError("RANGE", "at most K^d caps");
    if (fam.level < level) throw ValidationError("SCALE_MISMATCH", "family is coarser than 1/K");
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> all;
    for (const auto& cap : R) {
        if (cap.level != level || cap.anchor.size() != fam.d) throw ValidationError("SCALE_MISMATCH", "caps must lie in Part_{1/K}");
        std::vector<std::size_t> g;
        for (std::size_t i = 0; i < fam.caps.size(); ++i)
            if (cap.contains(fam.caps[i])) g.push_back(i);
        groups.push_back(g);
        all.insert(all.end(), g.begin(), g.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    auto L = make_layout(fam, all, p, nullptr, cfg, static_cast<double>(K));
    std::size_t D = fam.dim(), total = 1;
    std::vector<std::size_t> cnt(D), stride(D);
    for (std::size_t k = 0; k < D; ++k) {
        cnt[k] = static_cast<std::size_t>(std::max(0L, L.jhi[k] - L.jlo[k] + 1));
        stride[k] = total;
        total *= cnt[k];
    }
    if (total > 50000000) throw Error("TOO_LARGE", "lattice for the multilinear estimate is too large");
    bool even = std::floor(p / 2.0) * 2.0 == p;
    auto point = [&](std::size_t flat) {
        std::vector<double> z(D);
        for (std::size_t k = 0; k < D; ++k) {
            z[k] = static_cast<double>(L.jlo[k] + static_cast<long>(flat % cnt[k])) * L.h[k];
            flat /= cnt[k];
        }
        return z;
    };
    std::vector<std::vector<double>> powers(groups.size(), std::vector<double>(total, 0.0));
    parallel_for(total, [&](std::size_t flat) {
        auto z = point(flat);
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            Complex F = 0.0;
            for (auto i : groups[gi]) {
                const auto& pk = fam.packets[i];
                bool inside = true;
                for (std::size_t r = 0; r < D && inside; ++r) {
                    double u = 0.0;
                    for (std::size_t c = 0; c < D; ++c) u += pk.M[r][c] * z[c];
                    inside = std::fabs(u) <= L.window[r];
                }
                if (inside) F += fam.eval(i, z);
            }
            powers[gi][flat] = power_of(F, p, even);
        }
    });
    // lattice offsets inside the ball of radius K
    std::vector<std::vector<long>> offsets;
    {
        std::vector<long> reach(D);
        std::size_t box = 1;
        for (std::size_t k = 0; k < D; ++k) {
            reach[k] = static_cast<long>(std::floor(static_cast<double>(K) / L.h[k]));
            box *= static_cast<std::size_t>(2 * reach[k] + 1);
        }
        for (std::size_t f = 0; f < box; ++f) {
            std::size_t r = f;
            std::vector<long> o(D);
            double s = 0.0;
            for (std::size_t k = 0; k < D; ++k) {
                auto span = static_cast<std::size_t>(2 * reach[k] + 1);
                o[k] = static_cast<long>(r % span) - reach[k];
                r /= span;
                double t = static_cast<double>(o[k]) * L.h[k];
                s += t * t;
            }
            if (s <= static_cast<double>(K * K)) offsets.push_back(o);
        }
    }
    auto M = static_cast<double>(groups.size());
    std::vector<double> integrand(total, 0.0);
    std::vector<std::vector<double>> avg(groups.size(), std::vector<double>(total, 0.0));
    parallel_for(total, [&](std::size_t flat) {
        std::vector<long> j(D);
        std::size_t r = flat;
        for (std::size_t k = 0; k < D; ++k) {
            j[k] = static_cast<long>(r % cnt[k]);
            r /= cnt[k];
        }
        double prod = 1.0;
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            double s = 0.0;
            for (const auto& o : offsets) {
                std::size_t idx = 0;
                bool ok = true;
                for (std::size_t k = 0; k < D && ok; ++k) {
                    long t = j[k] + o[k];
                    if (t < 0 || t >= static_cast<long>(cnt[k])) ok = false;
                    else idx += static_cast<std::size_t>(t) * stride[k];
                }
                if (ok) s += powers[gi][idx];
            }
            double a = s / static_cast<double>(offsets.size());
            avg[gi][flat] = a;
            prod *= std::pow(a, 1.0 / M);
        }
        integrand[flat] = prod;
    });
    double vol = 1.0;
    for (double h : L.h) vol *= h;
    MuldecReport rep;
    rep.points = total;
    double s = 0.0;
    for (double v : integrand) s += v;
    rep.value = std::pow(s * vol, 1.0 / p);
    rep.hoelder_bound = 1.0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        double t = 0.0;
        for (double v : avg[gi]) t += v;
        rep.single_norms.push_back(std::pow(t * vol, 1.0 / p));
        rep.hoelder_bound *= std::pow(rep.single_norms.back(), 1.0 / M);
    }
    return rep;
}

KappaResult kappa_ptilde(long d, long n, const Rational& p) {
    if (p < 2) throw ValidationError("RANGE", "need p >= 2");
    if (d < 1 || n < 1) throw ValidationError("RANGE", "need d, n >= 1");
    KappaResult r;
    r.p_tilde = std::max(Rational(2), Rational(p * d / (d + n)));
    r.kappa = p == 2 ? Rational(0) : Rational((Q(1, 2) - 1 / r.p_tilde) / (Q(1, 2) - 1 / p));
    bool small = r.kappa <= Q(1, 2), range = p <= Rational(2 * (d + 2 * n)) / d;
    if (small != range) throw Error("INTERNAL", "kappa <= 1/2 disagrees with p <= 2(d+2n)/d");
    return r;
}

bool descent_regime(long d, long n, const Rational& p) { return p <= 2 + Rational(4 * n) / d; }

Rational eta_tilde(const Rational& sigma, long d, long n, const Rational& p) {
    if (sigma <= 0) throw ValidationError("RANGE", "sigma must be positive");
    auto k = kappa_ptilde(d, n, p);
    if (k.kappa == 0) throw ValidationError("KAPPA_ZERO", "kappa vanishes at p = p_tilde; no descent");
    Rational t = Rational(d) / (2 * k.kappa * sigma);
    mpz_class m = t.get_num() / t.get_den();
    if (m * t.get_den() != t.get_num()) m += 1;
    if (m > 100000000) throw Error("TOO_LARGE", "exponent in the descent step is too large");
    Rational base = 1 - k.kappa;
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), m.get_ui());
    mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), m.get_ui());
    Rational pw(num, den);
    pw.canonicalize();
    return sigma * pw;
}

DescentState descent_state(long d, long n, const Rational& p, const Rational& eta0, std::optional<Rational> Lambda) {
    kappa_ptilde(d, n, p);
    DescentState s{d, n, p, 0, eta0};
    Rational base = Rational(d) * (Q(1, 2) - 1 / p);
    s.Lambda = Lambda ? *Lambda : base;
    if (s.Lambda < base) throw ValidationError("INVALID_STATE", "Lambda must be at least d(1/2-1/p)");
    if (eta0 < s.Lambda) throw ValidationError("INVALID_STATE", "eta0 must be at least Lambda");
    return s;
}

std::vector<Rational> descent_iterate(const DescentState& s, std::size_t steps) {
    Rational base = Rational(s.d) * (Q(1, 2) - 1 / s.p);
    std::vector<Rational> seq{s.eta};
    Rational eta = s.eta;
    for (std::size_t k = 0; k < steps; ++k) {
        Rational sigma = eta - base;
        if (sigma <= 0) break;
        Rational next = eta - eta_tilde(sigma, s.d, s.n, s.p);
        eta = std::max(s.Lambda, next);
        seq.push_back(eta);
    }
    return seq;
}

SharpnessResult sharpness(const QuadTuple& T, const SharpnessConfig& cfg) {
    if (cfg.dmin < 0 || cfg.dmax < cfg.dmin + 2) throw ValidationError("RANGE", "need at least 3 scales");
    if (cfg.family != "modulated" && cfg.family != "rescaled") throw ValidationError("FAMILY", "family must be modulated or rescaled");
    SharpnessResult res;
    res.lower_bound = lower_bound_exponent(static_cast<long>(T.d), static_cast<long>(T.n), rationalize(cfg.p, 1000),
                                           rationalize(cfg.q, 1000));
    bool even = std::floor(cfg.p / 2) * 2 == cfg.p;
    for (int level = cfg.dmin; level <= cfg.dmax; ++level) {
        double delta = std::ldexp(1.0, -level);
        RatioReport r;
        if (cfg.family == "modulated") {
            double c = cfg.modulated_radius;
            if (c <= 0) {
                auto fam0 = example_family_modulated(T, 0, 1.0);
                c = to_double(fam0.key_spacing_bound) / std::ceil(cfg.p / 2) / 2;
            }
            auto fam = example_family_modulated(T, level, c);
            r = even ? dec_ratio_energy(fam, static_cast<unsigned>(cfg.p), cfg.q) : dec_ratio(fam, cfg.p, cfg.q, nullptr, cfg.quad);
        } else {
            auto fam = example_family_rescaled(T, level);
            r = dec_ratio(fam, cfg.p, cfg.q, nullptr, cfg.quad);
        }
        res.table.emplace_back(delta, r.ratio);
        res.methods.push_back(r.method);
    }
    res.fit = fit_exponent(res.table);
    return res;
}

nlohmann::json fit_to_json(const ExponentFit& f) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& [d, r] : f.table) t.push_back({{"delta", d}, {"ratio", r}});
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.stderr_slope}, {"r2", f.r2}, {"table", t}};
}

nlohmann::json ratio_to_json(const RatioReport& r) {
    return {{"ratio", r.ratio},         {"numerator", r.numerator}, {"denominator", r.denominator},
            {"ceiling", r.ceiling},     {"pieces", r.pieces},       {"lattice_points", r.points},
            {"method", r.method},       {"tail_bound", r.tail_bound}};
}

nlohmann::json sharpness_to_json(const SharpnessResult& s) {
    return {{"fit", fit_to_json(s.fit)}, {"lower_bound", to_string(s.lower_bound)}, {"methods", s.methods}};
}

std::string sharpness_csv(const SharpnessResult& s) {
    std::ostringstream out;
    out.precision(17);
    out << "delta,ratio\n";
    for (const auto& [d, r] : s.table) out << d << ',' << r << '\n';
    return out.str();
}

}  // namespace qdec
