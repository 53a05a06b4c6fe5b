#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdec {

using Rational = mpq_class;
using RVec = std::vector<Rational>;

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Thrown for malformed input; the CLI maps it to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Canonical num/den; the two-argument mpq_class constructor does not reduce.
inline Rational Q(long num, long den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q);
Rational parse_rational(const std::string& s);
double to_double(const Rational& q);
// Nearest rational with denominator at most max_den (continued fractions).
Rational rationalize(double x, long max_den);
Rational dyadic(int k);  // 2^-k for k >= 0, 2^|k| otherwise
Rational abs(const Rational& q);

class RMatrix {
public:
    RMatrix() = default;
    RMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    static RMatrix identity(std::size_t n);
    static RMatrix from_rows(const std::vector<RVec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    RMatrix transpose() const;
    RMatrix operator*(const RMatrix& o) const;
    RVec operator*(const RVec& v) const;
    RMatrix operator+(const RMatrix& o) const;
    RMatrix operator*(const Rational& c) const;
    bool operator==(const RMatrix& o) const;
    bool is_symmetric() const;
    RVec row(std::size_t i) const;
    RVec col(std::size_t j) const;
    // Max absolute row sum.
    Rational inf_norm() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> data_;
};

std::size_t rank(RMatrix m);
Rational det(RMatrix m);
// Solves m x = b for square nonsingular m; throws on singular systems.
RVec solve(RMatrix m, RVec b);
// Basis of the null space of m (right kernel).
std::vector<RVec> null_space(RMatrix m);
// Nonzero rows of the reduced row echelon form.
std::vector<RVec> row_basis(RMatrix m);

Rational dot(const RVec& a, const RVec& b);

// Portable random helpers; the standard distributions are implementation-defined.
using Rng = std::mt19937_64;
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
long uniform_int(Rng& rng, long lo, long hi);
double normal(Rng& rng);

}  // namespace qdec
