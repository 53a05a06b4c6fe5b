#pragma once

#include "qdec/rational.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <vector>

namespace qdec {

using Multiindex = std::vector<unsigned>;

unsigned total_degree(const Multiindex& a);

// Graded lexicographic order: total degree first, then lex with x1 most significant.
struct GradedLex {
    bool operator()(const Multiindex& a, const Multiindex& b) const;
};

class MultiPoly {
public:
    using TermMap = std::map<Multiindex, Rational, GradedLex>;

    explicit MultiPoly(std::size_t nvars = 0) : nvars_(nvars) {}
    static MultiPoly constant(std::size_t nvars, const Rational& c);
    static MultiPoly variable(std::size_t nvars, std::size_t i);
    static MultiPoly monomial(const Multiindex& a, const Rational& c);

    std::size_t nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    // Degree of the zero polynomial is reported as 0.
    unsigned degree() const;
    Rational coeff(const Multiindex& a) const;
    void add_term(const Multiindex& a, const Rational& c);

    MultiPoly operator+(const MultiPoly& o) const;
    MultiPoly operator-(const MultiPoly& o) const;
    MultiPoly operator-() const;
    MultiPoly operator*(const MultiPoly& o) const;
    MultiPoly operator*(const Rational& c) const;
    MultiPoly& operator+=(const MultiPoly& o);
    MultiPoly& operator-=(const MultiPoly& o);
    bool operator==(const MultiPoly& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }
    bool operator!=(const MultiPoly& o) const { return !(*this == o); }

    // Leading term in graded-lex order; requires nonzero.
    std::pair<Multiindex, Rational> leading() const;

private:
    std::size_t nvars_;
    TermMap terms_;
};

Rational poly_eval(const MultiPoly& p, const RVec& x);
double poly_eval(const MultiPoly& p, const std::vector<double>& x);
MultiPoly poly_partial(const MultiPoly& p, const Multiindex& alpha);
Rational poly_norm1(const MultiPoly& p);
std::vector<double> poly_gradient(const MultiPoly& p, const std::vector<double>& x);

// Exact quotient a / b; throws NOT_DIVISIBLE if b does not divide a.
MultiPoly poly_divide_exact(const MultiPoly& a, const MultiPoly& b);
// Replace each variable x_i by subs[i] (all subs share a target nvars).
MultiPoly poly_substitute(const MultiPoly& p, const std::vector<MultiPoly>& subs);

class PolyMatrix {
public:
    PolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars);
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nvars() const { return nvars_; }
    MultiPoly& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
    const MultiPoly& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    PolyMatrix submatrix(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const;

private:
    std::size_t rows_, cols_, nvars_;
    std::vector<MultiPoly> entries_;
};

MultiPoly poly_det(const PolyMatrix& m);
std::vector<MultiPoly> polymat_minors(const PolyMatrix& m, std::size_t k);
// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k);

struct ZeroTest {
    bool zero;
    RVec witness;  // empty when zero
};

ZeroTest poly_is_zero(const MultiPoly& p, unsigned trials, std::uint64_t seed);

nlohmann::json poly_to_json(const MultiPoly& p);
MultiPoly poly_from_json(const nlohmann::json& j);
std::string poly_to_string(const MultiPoly& p);

}  // namespace qdec
