#include "qdec/decnum.hpp"

#include <cmath>
#include <numeric>

namespace qdec {

double Bump::operator()(double s) const {
    double x = M_PI * (c / 4.0) * s;
    if (std::fabs(x) < 1e-8) return 1.0;
    double r = std::sin(x) / x;
    r *= r;
    r *= r;
    return r * r;
}

double Bump::lp_norm(double p) const {
    // |bump|^p is band-limited to [-p c, p c], so this lattice sum is exact up to the far tail.
    double h = 0.5 / (c * std::max(p, 1.0));
    double limit = 400.0 * first_zero();
    double sum = 0.0;
    auto steps = static_cast<long>(limit / h);
    for (long k = -steps; k <= steps; ++k) sum += std::pow((*this)(static_cast<double>(k) * h), p);
    return std::pow(sum * h, 1.0 / p);
}

Complex PacketFamily::eval(std::size_t i, const std::vector<double>& z) const {
    const auto& pk = packets.at(i);
    double amp = 1.0, phase = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) {
        double u = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) u += pk.M[r][k] * z[k];
        amp *= bumps[r](u);
        phase += pk.freq[r] * z[r];
    }
    return std::polar(amp, 2 * M_PI * phase);
}

namespace {

PacketFamily base_family(const QuadTuple& T, int level, const std::string& kind) {
    if (level < 0) throw ValidationError("RANGE", "delta must be a dyadic number in (0,1]");
    if (T.d + T.n > 6) throw ValidationError("RANGE", "families are limited to d+n <= 6");
    PacketFamily fam;
    fam.kind = kind;
    fam.d = T.d;
    fam.n = T.n;
    fam.level = level;
    fam.caps = caps_partition(T.d, level);
    return fam;
}

mpz_class form_denominator(const QuadTuple& T) {
    mpz_class den = 1;
    for (const auto& m : T.forms)
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), m(i, j).get_den_mpz_t());
    return den;
}

}  // namespace

PacketFamily example_family_modulated(const QuadTuple& T, int level, double spectral_radius) {
    if (!(spectral_radius > 0)) throw ValidationError("RANGE", "spectral radius must be positive");
    auto fam = base_family(T, level, "modulated");
    std::size_t D = T.d + T.n;
    double s2 = std::ldexp(1.0, -2 * level);
    mpz_class den = form_denominator(T);
    fam.key_dim = D;
    fam.key_spacing_bound = Rational(1) / (8 * den);
    for (const auto& cap : fam.caps) {
        WavePacket pk;
        auto a = cap.center_double();
        pk.freq = a;
        for (double v : T.eval_all(a)) pk.freq.push_back(v);
        pk.M.assign(D, std::vector<double>(D, 0.0));
        for (std::size_t i = 0; i < D; ++i) pk.M[i][i] = s2;
        fam.packets.push_back(std::move(pk));
        // 2a / delta and 4 den P(a) / delta^2 are integers at cap centers
        std::vector<mpz_class> odd;
        for (const auto& x : cap.anchor) {
            Rational v = x * dyadic(-level) * 2 + 1;
            odd.push_back(v.get_num());
            fam.energy_keys.push_back(v.get_num().get_si());
        }
        for (const auto& m : T.forms) {
            Rational s = 0;
            for (std::size_t i = 0; i < T.d; ++i)
                for (std::size_t j = 0; j < T.d; ++j) s += m(i, j) * Rational(odd[i] * odd[j]);
            Rational key = s * Rational(den);
            fam.energy_keys.push_back(key.get_num().get_si());
        }
    }
    fam.bumps.assign(D, Bump{spectral_radius});
    return fam;
}

PacketFamily example_family_rescaled(const QuadTuple& T, int level, double tangent_radius, double normal_radius) {
    if (!(tangent_radius > 0) || !(normal_radius > 0)) throw ValidationError("RANGE", "spectral radii must be positive");
    auto fam = base_family(T, level, "rescaled");
    std::size_t D = T.d + T.n;
    for (const auto& cap : fam.caps) {
        WavePacket pk;
        for (const auto& x : cap.anchor) pk.freq.push_back(to_double(x));
        for (const auto& v : T.eval_all(cap.anchor)) pk.freq.push_back(to_double(v));
        auto r = reparam(cap, T);
        pk.M.assign(D, std::vector<double>(D, 0.0));
        for (std::size_t i = 0; i < D; ++i)
            for (std::size_t j = 0; j < D; ++j) pk.M[i][j] = to_double(r.L(i, j));
        fam.packets.push_back(std::move(pk));
    }
    for (std::size_t i = 0; i < D; ++i) fam.bumps.push_back(Bump{i < T.d ? tangent_radius : normal_radius});
    return fam;
}

}  // namespace qdec
