#include "qdec/rational.hpp"

#include <cmath>
#include <utility>

namespace qdec {

std::string to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rational parse_rational(const std::string& s) {
    if (s.empty()) throw ValidationError("BAD_RATIONAL", "empty string");
    auto dot = s.find('.');
    auto e = s.find_first_of("eE");
    if (dot != std::string::npos || e != std::string::npos) {
        // Decimal literal: parse exactly, not through double.
        std::string mant = e == std::string::npos ? s : s.substr(0, e);
        long exp10 = 0;
        if (e != std::string::npos) {
            try {
                exp10 = std::stol(s.substr(e + 1));
            } catch (...) {
                throw ValidationError("BAD_RATIONAL", "bad exponent in '" + s + "'");
            }
        }
        std::string digits;
        bool neg = false;
        std::size_t i = 0;
        if (i < mant.size() && (mant[i] == '-' || mant[i] == '+')) neg = mant[i++] == '-';
        bool seen_dot = false;
        long frac = 0;
        for (; i < mant.size(); ++i) {
            if (mant[i] == '.') {
                if (seen_dot) throw ValidationError("BAD_RATIONAL", s);
                seen_dot = true;
            } else if (mant[i] >= '0' && mant[i] <= '9') {
                digits += mant[i];
                if (seen_dot) ++frac;
            } else {
                throw ValidationError("BAD_RATIONAL", s);
            }
        }
        if (digits.empty()) throw ValidationError("BAD_RATIONAL", s);
        mpz_class num(digits, 10);
        mpz_class ten = 10;
        long shift = exp10 - frac;
        mpz_class scale;
        mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(std::labs(shift)));
        Rational r = shift >= 0 ? Rational(num * scale) : Rational(num, scale);
        r.canonicalize();
        return neg ? Rational(-r) : r;
    }
    Rational r;
    if (r.set_str(s, 10) != 0) throw ValidationError("BAD_RATIONAL", "cannot parse '" + s + "'");
    if (r.get_den() == 0) throw ValidationError("BAD_RATIONAL", "zero denominator in '" + s + "'");
    r.canonicalize();
    return r;
}

double to_double(const Rational& q) { return q.get_d(); }

Rational rationalize(double x, long max_den) {
    if (!std::isfinite(x)) throw Error("NONFINITE", "cannot rationalize a non-finite value");
    bool neg = x < 0;
    double v = std::fabs(x);
    mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = v;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(r);
        mpz_class ai(a);
        mpz_class p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = r - a;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    if (q1 == 0) return Rational(0);
    Rational out(p1, q1);
    out.canonicalize();
    return neg ? Rational(-out) : out;
}

Rational dyadic(int k) {
    mpz_class two = 1;
    two <<= static_cast<unsigned>(k >= 0 ? k : -k);
    return k >= 0 ? Rational(mpz_class(1), two) : Rational(two);
}

Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

RMatrix RMatrix::identity(std::size_t n) {
    RMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

RMatrix RMatrix::from_rows(const std::vector<RVec>& rows) {
    if (rows.empty()) return {};
    RMatrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols_) throw ValidationError("SHAPE", "ragged matrix rows");
        for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

RMatrix RMatrix::transpose() const {
    RMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

RMatrix RMatrix::operator*(const RMatrix& o) const {
    if (cols_ != o.rows_) throw Error("SHAPE", "matrix product dimension mismatch");
    RMatrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const Rational& a = (*this)(i, k);
            if (a == 0) continue;
            for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
        }
    return r;
}

RVec RMatrix::operator*(const RVec& v) const {
    if (cols_ != v.size()) throw Error("SHAPE", "matrix-vector dimension mismatch");
    RVec r(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
}

RMatrix RMatrix::operator+(const RMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw Error("SHAPE", "matrix sum dimension mismatch");
    RMatrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
}

RMatrix RMatrix::operator*(const Rational& c) const {
    RMatrix r = *this;
    for (auto& x : r.data_) x *= c;
    return r;
}

bool RMatrix::operator==(const RMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
}

bool RMatrix::is_symmetric() const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
}

RVec RMatrix::row(std::size_t i) const {
    return RVec(data_.begin() + static_cast<long>(i * cols_), data_.begin() + static_cast<long>((i + 1) * cols_));
}

RVec RMatrix::col(std::size_t j) const {
    RVec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

Rational RMatrix::inf_norm() const {
    Rational best = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
        Rational s = 0;
        for (std::size_t j = 0; j < cols_; ++j) s += abs((*this)(i, j));
        if (s > best) best = s;
    }
    return best;
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RMatrix& m) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
        std::size_t p = r;
        while (p < m.rows() && m(p, c) == 0) ++p;
        if (p == m.rows()) continue;
        if (p != r)
            for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
        Rational inv = 1 / m(r, c);
        for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == r || m(i, c) == 0) continue;
            Rational f = m(i, c);
            for (std::size_t j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

}  // namespace

std::size_t rank(RMatrix m) { return rref(m).size(); }

Rational det(RMatrix m) {
    if (m.rows() != m.cols()) throw Error("SHAPE", "determinant of a non-square matrix");
    std::size_t n = m.rows();
    Rational d = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && m(p, c) == 0) ++p;
        if (p == n) return 0;
        if (p != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(c, j));
            d = -d;
        }
        d *= m(c, c);
        for (std::size_t i = c + 1; i < n; ++i) {
            if (m(i, c) == 0) continue;
            Rational f = m(i, c) / m(c, c);
            for (std::size_t j = c; j < n; ++j) m(i, j) -= f * m(c, j);
        }
    }
    return d;
}

RVec solve(RMatrix m, RVec b) {
    std::size_t n = m.rows();
    if (m.cols() != n || b.size() != n) throw Error("SHAPE", "solve expects a square system");
    RMatrix aug(n, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = m(i, j);
        aug(i, n) = b[i];
    }
    auto piv = rref(aug);
    if (piv.size() < n || piv.back() >= n) throw Error("SINGULAR", "linear system is singular");
    RVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = aug(i, n);
    return x;
}

std::vector<RVec> null_space(RMatrix m) {
    auto piv = rref(m);
    std::vector<bool> is_piv(m.cols(), false);
    for (auto c : piv) is_piv[c] = true;
    std::vector<RVec> basis;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        if (is_piv[f]) continue;
        RVec v(m.cols());
        v[f] = 1;
        for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m(r, f);
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<RVec> row_basis(RMatrix m) {
    auto piv = rref(m);
    std::vector<RVec> rows;
    for (std::size_t r = 0; r < piv.size(); ++r) rows.push_back(m.row(r));
    return rows;
}

Rational dot(const RVec& a, const RVec& b) {
    if (a.size() != b.size()) throw Error("SHAPE", "dot product dimension mismatch");
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

long uniform_int(Rng& rng, long lo, long hi) {
    auto span = static_cast<unsigned long long>(hi - lo) + 1ULL;
    return lo + static_cast<long>(rng() % span);
}

double normal(Rng& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace qdec
