#pragma once

#include "qdec/rational.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace qdec {

// Linear subspace of Q^ambient given by independent basis rows.
class Subspace {
public:
    Subspace() = default;
    // Throws ValidationError unless the rows are independent and of length `ambient`.
    Subspace(std::size_t ambient, std::vector<RVec> basis);
    // Span of arbitrary vectors; dependent rows are dropped.
    static Subspace span(std::size_t ambient, const std::vector<RVec>& vectors);
    static Subspace zero(std::size_t ambient) { return Subspace(ambient, {}); }
    static Subspace full(std::size_t ambient);
    static Subspace coordinate(std::size_t ambient, const std::vector<std::size_t>& axes);

    std::size_t ambient() const { return ambient_; }
    std::size_t dim() const { return basis_.size(); }
    const std::vector<RVec>& basis() const { return basis_; }

    bool contains(const RVec& v) const;
    bool operator==(const Subspace& o) const;
    // Reduced echelon basis rendered as text; equal subspaces give equal keys.
    std::string key() const;

private:
    std::size_t ambient_ = 0;
    std::vector<RVec> basis_;
};

Subspace sum(const Subspace& a, const Subspace& b);
Subspace intersect(const Subspace& a, const Subspace& b);
Subspace orth_complement(const Subspace& a);

// R^d x {0} and {0} x R^n inside R^{d+n}.
Subspace first_factor(std::size_t d, std::size_t n);
Subspace second_factor(std::size_t d, std::size_t n);

// Orthonormalized Gaussian rows, rationalized; retried until the exact rank is k.
Subspace random_subspace(std::size_t ambient, std::size_t k, Rng& rng, long max_den = 1000);

nlohmann::json subspace_to_json(const Subspace& V);
Subspace subspace_from_json(const nlohmann::json& j, std::size_t ambient = 0);

}  // namespace qdec
