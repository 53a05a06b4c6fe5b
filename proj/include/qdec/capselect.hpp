#pragma once

#include "qdec/transversality.hpp"
#include "qdec/varieties.hpp"

#include <optional>

namespace qdec {

struct CapStock {
    std::size_t round = 0;
    std::vector<Cap> caps;
    std::vector<double> norms;
};

// norms[i] belongs to caps[i]; keeps caps whose norm is at least K^-d times the maximum.
CapStock initial_stock(const std::vector<Cap>& caps, const std::vector<double>& norms, std::uint64_t K, std::size_t d);

struct VarietyConfig {
    unsigned ransac = 64;
    long max_den = 1000000;
    double exact_tol = 1e-8;
    std::uint64_t seed = 0;
};

struct ConcentrationCertificate {
    MultiPoly Z;  // unit coefficient l1 norm
    double fraction = 0.0;
    double residual = 0.0;
    bool exact = false;
    std::vector<std::size_t> captured;  // indices into the input caps
};

// Caps count as captured when |Z(center)| <= Lip(Z) * 2 * side, Lip the gradient bound on [0,1]^d.
std::optional<ConcentrationCertificate> find_concentrating_variety(const std::vector<Cap>& caps, std::size_t d,
                                                                  const Rational& theta, const VarietyConfig& cfg);
bool captures(const MultiPoly& Z, const Cap& cap);

struct SelectConfig {
    std::optional<Rational> theta;  // defaults to compute_theta(d, n)
    long A = 2;
    TransversalityConfig transversality;
    VarietyConfig variety;
    CoverOptions cover{4, 4, LadderMode::COROLLARY};
};

struct SelectionLayer {
    std::size_t round = 0;
    std::size_t j = 0;
    CubeLayer layer;
};

struct SelectionOutcome {
    Rational theta = 0;
    std::size_t rounds = 0;
    std::vector<Cap> transverse;
    std::optional<TransversalityReport> report;
    std::vector<SelectionLayer> layers;
    std::vector<ConcentrationCertificate> certificates;
    std::vector<Cap> removed;
    std::vector<Cap> below_threshold;
};

// norms are listed in caps_partition(d, log2 K) order.
SelectionOutcome bg_select(const QuadTuple& T, const std::vector<double>& norms, std::uint64_t K, const SelectConfig& cfg);

// Exact containment of a cap in a dyadic cube of side 2^-level with integer index.
bool cube_contains_cap(int level, const std::vector<std::int64_t>& idx, const Cap& cap);

nlohmann::json cap_to_json(const Cap& c);
nlohmann::json certificate_to_json(const ConcentrationCertificate& c);
nlohmann::json outcome_to_json(const SelectionOutcome& o);

}  // namespace qdec
