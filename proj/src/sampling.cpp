#include "qdec/sampling.hpp"
#include "qdec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace qdec {

namespace {

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
                                73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151};

double radical_inverse(std::uint64_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

}  // namespace

std::vector<double> halton(std::uint64_t index, std::size_t dim, const std::vector<double>& shift) {
    if (dim > std::size(kPrimes)) throw Error("RANGE", "Halton dimension too large");
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        double v = radical_inverse(index + 1, kPrimes[k]) + (k < shift.size() ? shift[k] : 0.0);
        x[k] = v - std::floor(v);
    }
    return x;
}

std::vector<double> random_shift(Rng& rng, std::size_t dim) {
    std::vector<double> s(dim);
    for (auto& v : s) v = uniform01(rng);
    return s;
}

bool orthonormalize(std::vector<std::vector<double>>& rows, double tol) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double p = 0;
            for (std::size_t k = 0; k < rows[i].size(); ++k) p += rows[i][k] * rows[j][k];
            for (std::size_t k = 0; k < rows[i].size(); ++k) rows[i][k] -= p * rows[j][k];
        }
        double nrm = 0;
        for (double v : rows[i]) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm < tol) return false;
        for (double& v : rows[i]) v /= nrm;
    }
    return true;
}

RVec rationalize(const std::vector<double>& v, long max_den) {
    RVec r;
    r.reserve(v.size());
    for (double x : v) r.push_back(rationalize(x, max_den));
    return r;
}

}  // namespace qdec

namespace qdec {

unsigned thread_count() {
    const char* env = std::getenv("QDEC_THREADS");
    if (!env) return 1;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return static_cast<unsigned>(std::min(v, 256L));
}

}  // namespace qdec
