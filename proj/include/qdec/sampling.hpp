#pragma once

#include "qdec/rational.hpp"

#include <vector>

namespace qdec {

// Halton point `index` in [0,1)^dim, rotated by `shift` (Cranley-Patterson) modulo 1.
std::vector<double> halton(std::uint64_t index, std::size_t dim, const std::vector<double>& shift);
std::vector<double> random_shift(Rng& rng, std::size_t dim);

// Rows are orthonormalized in place (modified Gram-Schmidt); returns false if rank-deficient.
bool orthonormalize(std::vector<std::vector<double>>& rows, double tol = 1e-12);

RVec rationalize(const std::vector<double>& v, long max_den);

}  // namespace qdec
