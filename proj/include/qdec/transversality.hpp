#pragma once

#include "qdec/quadforms.hpp"
#include "qdec/subspace.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qdec {

// Tangent space V(t) of the graph of T at t and its orthogonal complement.
Subspace tangent_space(const QuadTuple& T, const RVec& t);
Subspace normal_space(const QuadTuple& T, const RVec& t);

// Rank of (<v_i, n_j(t)>), i.e. dim of the orthogonal projection of V onto V(t).
std::size_t proj_dim(const QuadTuple& T, const Subspace& V, const RVec& t);
// dim of the orthogonal projection of V onto W.
std::size_t proj_dim(const Subspace& V, const Subspace& W);

// A nonzero (H1+H2)-minor of the rows w_i + gradP(t) z_i; throws NO_CERTIFICATE if none.
MultiPoly proj_dim_certificate(const QuadTuple& T, const Subspace& V, std::size_t H1, std::size_t H2);

// dim V <= c * sum_j dim pi_j(V), exactly.
bool bcct_holds(const std::vector<Subspace>& spaces, const Rational& c, const Subspace& V);
bool bcct_check(const QuadTuple& T, const std::vector<RVec>& ts, const Subspace& V);

struct BcctConfig {
    unsigned random_per_dim = 4;
    std::size_t lattice_cap = 256;
    std::uint64_t seed = 0;
};

struct BcctResult {
    bool feasible = true;
    std::optional<Subspace> witness;
    std::size_t candidates = 0;
};

// Candidate search over the sum/intersection lattice of the spaces and their complements,
// coordinate subspaces and random subspaces.
BcctResult bcct_sampled(const std::vector<Subspace>& spaces, const Rational& c, const BcctConfig& cfg);
BcctResult bcct_sampled(const QuadTuple& T, const std::vector<RVec>& ts, const BcctConfig& cfg);

struct BLDatum {
    std::size_t ambient = 0;
    std::size_t dim = 0;
    std::vector<std::vector<std::vector<double>>> bases;  // per space: dim rows of length ambient
    double c = 0.0;

    // c = ambient / (dim * M); throws on mismatched dimensions.
    static BLDatum make(std::size_t ambient, std::vector<std::vector<std::vector<double>>> bases);
    static BLDatum from_subspaces(const std::vector<Subspace>& spaces);
};

struct BLConfig {
    double divergence = 1e12;
    double conditioning = 1e-12;
    double rel_tol = 1e-10;
    long max_iter = 100000;
};

struct BLResult {
    bool divergent = false;
    double value = 0.0;
    long iterations = 0;
    bool converged = false;
};

BLResult bl_constant_gaussian(const BLDatum& B, const BLConfig& cfg = {});

struct TransversalityConfig {
    unsigned random_points = 4;
    double nu_min = 1e-6;
    std::uint64_t seed = 0;
    BcctConfig bcct;
    BLConfig bl;
};

struct TransversalityReport {
    bool transverse = false;
    double nu_hat = 0.0;
    double max_bl = 0.0;
    std::string reason;
    std::optional<Subspace> witness;
    std::vector<RVec> witness_points;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

TransversalityReport nu_transverse(const QuadTuple& T, const std::vector<Cap>& caps, const TransversalityConfig& cfg);
nlohmann::json report_to_json(const TransversalityReport& r);

Rational compute_theta(long d, long n);

struct AuditConfig {
    unsigned per_dim = 16;
    std::uint64_t seed = 0;
};

struct AuditTally {
    std::size_t dim = 0;
    unsigned first_alternative = 0;
    unsigned second_alternative = 0;
    unsigned unknown = 0;
    unsigned failed = 0;
    unsigned max_certificate_degree = 0;
};

struct AuditReport {
    bool lemma_backed = false;
    unsigned degree_bound = 0;
    std::vector<AuditTally> tallies;
    std::vector<Subspace> failures;
    std::uint64_t seed = 0;
};

AuditReport hypothesis_transverse_audit(const QuadTuple& T, const AuditConfig& cfg);
nlohmann::json report_to_json(const AuditReport& r);

}  // namespace qdec
