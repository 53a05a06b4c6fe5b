#pragma once

#include "qdec/quadforms.hpp"

#include "json.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qdec {

using Complex = std::complex<double>;

struct WeightSpec {
    std::vector<double> center;
    double radius = 1.0;
    double E = 20.0;

    // E defaults to 10(d+n).
    static WeightSpec make(std::vector<double> center, double radius, std::size_t d, std::size_t n);
};

double weight_eval(const WeightSpec& W, const std::vector<double>& x);

// Samples of g at the cell midpoints of a dyadic domain cube, spacing 2^-spacing_level.
struct GridFunction {
    Cap domain;
    int spacing_level = 0;
    std::vector<Complex> samples;  // row-major, first coordinate fastest

    double spacing() const;
    std::size_t per_side() const;
};

GridFunction sample_grid(const Cap& domain, int spacing_level, const std::function<Complex(const std::vector<double>&)>& g);

struct ExtensionValue {
    Complex value;
    double error_bound = 0.0;
};

// Midpoint rule for the extension operator of the surface over the sub-cube R.
ExtensionValue extension_eval(const QuadTuple& T, const GridFunction& g, const Cap& R, const std::vector<double>& x);

// sinc(pi b s)^8 with b = c/4: nonnegative, value 1 at 0, spectrum a B-spline supported in [-c, c].
struct Bump {
    double c = 1.0;

    double operator()(double s) const;
    double first_zero() const { return 4.0 / c; }
    double lp_norm(double p) const;
};

// f(z) = e(freq . z) * prod_i bump_i((M z)_i), M block upper triangular with blocks d, n.
struct WavePacket {
    std::vector<double> freq;
    std::vector<std::vector<double>> M;
};

struct PacketFamily {
    std::string kind;
    std::size_t d = 0;
    std::size_t n = 0;
    int level = 0;
    std::vector<Cap> caps;
    std::vector<WavePacket> packets;
    std::vector<Bump> bumps;  // one per coordinate of M z
    std::vector<std::int64_t> energy_keys;  // integer frequency keys, modulated families only
    std::size_t key_dim = 0;
    Rational key_spacing_bound = 0;  // bump spectra narrower than this keep the energy identity exact

    std::size_t dim() const { return d + n; }
    Complex eval(std::size_t i, const std::vector<double>& z) const;
};

PacketFamily example_family_modulated(const QuadTuple& T, int level, double spectral_radius);
PacketFamily example_family_rescaled(const QuadTuple& T, int level, double tangent_radius = 2.0, double normal_radius = 16.0);

struct QuadratureConfig {
    std::vector<double> spacing;  // empty: largest spacing that keeps even powers exact
    double lobes = 1.0;           // packets truncated at this many first zeros of the bump
    double weight_truncation = 8.0;
    double max_spacing = 0.25;    // cap applied when a weight is present
};

struct LatticeReport {
    double integral = 0.0;  // integral of |sum f|^p (times the weight)
    std::size_t points = 0;
    std::vector<double> spacing;
    bool exact_lattice = false;
    double tail_bound = 0.0;  // envelope of the bump beyond the truncation window
};

LatticeReport lattice_power_integral(const PacketFamily& fam, const std::vector<std::size_t>& subset, double p,
                                     const WeightSpec* W, const QuadratureConfig& cfg);
// Global L^p norm of a single packet from the change of variables.
double packet_norm(const PacketFamily& fam, std::size_t i, double p);

struct RatioReport {
    double ratio = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    double ceiling = 0.0;  // pieces^(1 - 1/q), the triangle and Hoelder bound
    std::size_t pieces = 0;
    std::size_t points = 0;
    std::string method;
    double tail_bound = 0.0;
};

// ||sum f||_{L^p(w)} / (sum ||f||_{L^p(w)}^q)^{1/q}; global norms when W is null.
RatioReport dec_ratio(const PacketFamily& fam, double p, double q, const WeightSpec* W, const QuadratureConfig& cfg = {});
// Exact global ratio for modulated families and even p via additive energy of the frequency centers.
RatioReport dec_ratio_energy(const PacketFamily& fam, unsigned p, double q);

Rational lower_bound_exponent(long d, long n, const Rational& p, const Rational& q);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 1.0;
    std::vector<std::pair<double, double>> table;  // (delta, ratio)
};

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& table);

struct MuldecReport {
    double value = 0.0;
    std::vector<double> single_norms;  // mollified L^p norm of each f_{R_i}
    double hoelder_bound = 0.0;
    std::size_t points = 0;
};

// Caps R_i at scale 1/K; averages over balls B(x, K) on the lattice.
MuldecReport muldec_lhs(const PacketFamily& fam, const std::vector<Cap>& R, std::uint64_t K, double p,
                        const QuadratureConfig& cfg = {});

struct KappaResult {
    Rational p_tilde;
    Rational kappa;
};

KappaResult kappa_ptilde(long d, long n, const Rational& p);
Rational eta_tilde(const Rational& sigma, long d, long n, const Rational& p);
// True when p <= 2 + 4n/d, the range where the iteration keeps kappa <= 1/2.
bool descent_regime(long d, long n, const Rational& p);

struct DescentState {
    long d = 0;
    long n = 0;
    Rational p = 2;
    Rational Lambda = 0;
    Rational eta = 0;
};

DescentState descent_state(long d, long n, const Rational& p, const Rational& eta0, std::optional<Rational> Lambda = {});
std::vector<Rational> descent_iterate(const DescentState& s, std::size_t steps);

struct SharpnessConfig {
    std::string family = "modulated";
    double p = 6.0;
    double q = 6.0;
    int dmin = 3;
    int dmax = 7;
    QuadratureConfig quad;
    double modulated_radius = 0.0;  // 0: chosen to keep the energy identity exact
};

struct SharpnessResult {
    std::vector<std::pair<double, double>> table;
    std::vector<std::string> methods;
    ExponentFit fit;
    Rational lower_bound;
};

SharpnessResult sharpness(const QuadTuple& T, const SharpnessConfig& cfg);

nlohmann::json fit_to_json(const ExponentFit& f);
nlohmann::json ratio_to_json(const RatioReport& r);
nlohmann::json sharpness_to_json(const SharpnessResult& s);
std::string sharpness_csv(const SharpnessResult& s);

}  // namespace qdec
