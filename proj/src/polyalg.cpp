#include "qdec/polyalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qdec {

unsigned total_degree(const Multiindex& a) { return std::accumulate(a.begin(), a.end(), 0u); }

bool GradedLex::operator()(const Multiindex& a, const Multiindex& b) const {
    unsigned da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a < b;
}

MultiPoly MultiPoly::constant(std::size_t nvars, const Rational& c) {
    MultiPoly p(nvars);
    p.add_term(Multiindex(nvars, 0), c);
    return p;
}

MultiPoly MultiPoly::variable(std::size_t nvars, std::size_t i) {
    if (i >= nvars) throw Error("DIMENSION", "variable index out of range");
    Multiindex a(nvars, 0);
    a[i] = 1;
    return monomial(a, 1);
}

MultiPoly MultiPoly::monomial(const Multiindex& a, const Rational& c) {
    MultiPoly p(a.size());
    p.add_term(a, c);
    return p;
}

unsigned MultiPoly::degree() const {
    if (terms_.empty()) return 0;
    return total_degree(terms_.rbegin()->first);
}

Rational MultiPoly::coeff(const Multiindex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? Rational(0) : it->second;
}

void MultiPoly::add_term(const Multiindex& a, const Rational& c) {
    if (a.size() != nvars_) throw Error("DIMENSION", "multiindex length differs from nvars");
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(a, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
    if (o.nvars_ != nvars_) throw Error("DIMENSION", "nvars mismatch in sum");
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o) {
    if (o.nvars_ != nvars_) throw Error("DIMENSION", "nvars mismatch in difference");
    for (const auto& [a, c] : o.terms_) add_term(a, -c);
    return *this;
}

MultiPoly MultiPoly::operator+(const MultiPoly& o) const {
    MultiPoly r = *this;
    r += o;
    return r;
}

MultiPoly MultiPoly::operator-(const MultiPoly& o) const {
    MultiPoly r = *this;
    r -= o;
    return r;
}

MultiPoly MultiPoly::operator-() const {
    MultiPoly r(nvars_);
    for (const auto& [a, c] : terms_) r.terms_.emplace(a, -c);
    return r;
}

MultiPoly MultiPoly::operator*(const MultiPoly& o) const {
    if (o.nvars_ != nvars_) throw Error("DIMENSION", "nvars mismatch in product");
    MultiPoly r(nvars_);
    Multiindex s(nvars_);
    for (const auto& [a, ca] : terms_)
        for (const auto& [b, cb] : o.terms_) {
            for (std::size_t i = 0; i < nvars_; ++i) s[i] = a[i] + b[i];
            r.add_term(s, ca * cb);
        }
    return r;
}

MultiPoly MultiPoly::operator*(const Rational& c) const {
    MultiPoly r(nvars_);
    if (c == 0) return r;
    for (const auto& [a, v] : terms_) r.terms_.emplace(a, v * c);
    return r;
}

std::pair<Multiindex, Rational> MultiPoly::leading() const {
    if (terms_.empty()) throw Error("ZERO_POLY", "leading term of the zero polynomial");
    return *terms_.rbegin();
}

Rational poly_eval(const MultiPoly& p, const RVec& x) {
    if (x.size() != p.nvars()) throw Error("DIMENSION", "point dimension differs from nvars");
    Rational s = 0;
    for (const auto& [a, c] : p.terms()) {
        Rational t = c;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0) continue;
            mpq_class pw;
            mpz_pow_ui(pw.get_num_mpz_t(), x[i].get_num_mpz_t(), a[i]);
            mpz_pow_ui(pw.get_den_mpz_t(), x[i].get_den_mpz_t(), a[i]);
            t *= pw;
        }
        s += t;
    }
    return s;
}

double poly_eval(const MultiPoly& p, const std::vector<double>& x) {
    if (x.size() != p.nvars()) throw Error("DIMENSION", "point dimension differs from nvars");
    double s = 0;
    for (const auto& [a, c] : p.terms()) {
        double t = c.get_d();
        for (std::size_t i = 0; i < a.size(); ++i)
            for (unsigned e = 0; e < a[i]; ++e) t *= x[i];
        s += t;
    }
    return s;
}

MultiPoly poly_partial(const MultiPoly& p, const Multiindex& alpha) {
    if (alpha.size() != p.nvars()) throw Error("DIMENSION", "multiindex length differs from nvars");
    MultiPoly r(p.nvars());
    for (const auto& [a, c] : p.terms()) {
        Rational f = c;
        Multiindex b = a;
        bool vanish = false;
        for (std::size_t i = 0; i < a.size() && !vanish; ++i) {
            if (alpha[i] > a[i]) {
                vanish = true;
                break;
            }
            for (unsigned k = 0; k < alpha[i]; ++k) f *= a[i] - k;
            b[i] = a[i] - alpha[i];
        }
        if (!vanish) r.add_term(b, f);
    }
    return r;
}

Rational poly_norm1(const MultiPoly& p) {
    Rational s = 0;
    for (const auto& [a, c] : p.terms()) s += abs(c);
    return s;
}

std::vector<double> poly_gradient(const MultiPoly& p, const std::vector<double>& x) {
    std::vector<double> g(p.nvars(), 0.0);
    for (const auto& [a, c] : p.terms()) {
        double cd = c.get_d();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0) continue;
            double t = cd * a[i];
            for (std::size_t k = 0; k < a.size(); ++k) {
                unsigned e = k == i ? a[k] - 1 : a[k];
                for (unsigned r = 0; r < e; ++r) t *= x[k];
            }
            g[i] += t;
        }
    }
    return g;
}

MultiPoly poly_divide_exact(const MultiPoly& a, const MultiPoly& b) {
    if (b.is_zero()) throw Error("DIVISION_BY_ZERO", "exact division by the zero polynomial");
    MultiPoly rem = a, quo(a.nvars());
    auto [lb, cb] = b.leading();
    while (!rem.is_zero()) {
        auto [la, ca] = rem.leading();
        Multiindex q(la.size());
        for (std::size_t i = 0; i < la.size(); ++i) {
            if (la[i] < lb[i]) throw Error("NOT_DIVISIBLE", "polynomial is not an exact multiple");
            q[i] = la[i] - lb[i];
        }
        MultiPoly t = MultiPoly::monomial(q, ca / cb);
        quo += t;
        rem -= t * b;
    }
    return quo;
}

MultiPoly poly_substitute(const MultiPoly& p, const std::vector<MultiPoly>& subs) {
    if (subs.size() != p.nvars()) throw Error("DIMENSION", "substitution count differs from nvars");
    std::size_t target = subs.empty() ? 0 : subs[0].nvars();
    MultiPoly r(target);
    for (const auto& [a, c] : p.terms()) {
        MultiPoly t = MultiPoly::constant(target, c);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (unsigned e = 0; e < a[i]; ++e) t = t * subs[i];
        r += t;
    }
    return r;
}

PolyMatrix::PolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars)
    : rows_(rows), cols_(cols), nvars_(nvars), entries_(rows * cols, MultiPoly(nvars)) {}

PolyMatrix PolyMatrix::submatrix(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const {
    PolyMatrix s(rows.size(), cols.size(), nvars_);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = (*this)(rows[i], cols[j]);
    return s;
}

namespace {

MultiPoly det_cofactor(const PolyMatrix& m) {
    std::size_t n = m.rows();
    if (n == 0) return MultiPoly::constant(m.nvars(), 1);
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    MultiPoly r(m.nvars());
    std::vector<std::size_t> rest(n - 1);
    std::iota(rest.begin(), rest.end(), 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (m(0, j).is_zero()) continue;
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < n; ++c)
            if (c != j) cols.push_back(c);
        MultiPoly t = m(0, j) * det_cofactor(m.submatrix(rest, cols));
        if (j % 2 == 0)
            r += t;
        else
            r -= t;
    }
    return r;
}

MultiPoly det_bareiss(PolyMatrix m) {
    std::size_t n = m.rows();
    MultiPoly prev = MultiPoly::constant(m.nvars(), 1);
    bool negate = false;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m(k, k).is_zero()) {
            std::size_t p = k + 1;
            while (p < n && m(p, k).is_zero()) ++p;
            if (p == n) return MultiPoly(m.nvars());
            for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(k, j));
            negate = !negate;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                MultiPoly num = m(k, k) * m(i, j) - m(i, k) * m(k, j);
                m(i, j) = poly_divide_exact(num, prev);
            }
            m(i, k) = MultiPoly(m.nvars());
        }
        prev = m(k, k);
    }
    MultiPoly d = m(n - 1, n - 1);
    return negate ? -d : d;
}

}  // namespace

MultiPoly poly_det(const PolyMatrix& m) {
    if (m.rows() != m.cols()) throw Error("SHAPE", "determinant of a non-square polynomial matrix");
    if (m.rows() <= 4) return det_cofactor(m);
    return det_bareiss(m);
}

std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    if (k > n) return out;
    std::vector<std::size_t> s(k);
    std::iota(s.begin(), s.end(), 0);
    while (true) {
        out.push_back(s);
        std::size_t i = k;
        while (i > 0 && s[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++s[i - 1];
        for (std::size_t j = i; j < k; ++j) s[j] = s[j - 1] + 1;
    }
    return out;
}

std::vector<MultiPoly> polymat_minors(const PolyMatrix& m, std::size_t k) {
    if (k == 0 || k > std::min(m.rows(), m.cols()))
        throw Error("RANGE", "minor order out of range");
    std::vector<MultiPoly> out;
    auto rs = subsets(m.rows(), k);
    auto cs = subsets(m.cols(), k);
    for (const auto& r : rs)
        for (const auto& c : cs) out.push_back(poly_det(m.submatrix(r, c)));
    return out;
}

ZeroTest poly_is_zero(const MultiPoly& p, unsigned trials, std::uint64_t seed) {
    if (trials == 0) throw Error("RANGE", "trials must be at least 1");
    if (p.is_zero()) return {true, {}};
    long side = 2L * p.degree() + 1;
    Rng rng(seed);
    RVec x(p.nvars());
    for (unsigned long it = 0; it < 64UL * trials + 4096; ++it) {
        for (auto& xi : x) xi = uniform_int(rng, -side, side);
        if (poly_eval(p, x) != 0) return {false, x};
    }
    throw Error("NO_WITNESS", "nonzero polynomial without a witness in the sampling box");
}

nlohmann::json poly_to_json(const MultiPoly& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [a, c] : p.terms()) terms.push_back({a, to_string(c)});
    return {{"nvars", p.nvars()}, {"terms", terms}};
}

MultiPoly poly_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("nvars") || !j.contains("terms"))
        throw ValidationError("BAD_POLY", "polynomial JSON needs 'nvars' and 'terms'");
    if (!j["nvars"].is_number_unsigned()) throw ValidationError("BAD_POLY", "'nvars' must be a nonnegative integer");
    MultiPoly p(j["nvars"].get<std::size_t>());
    for (const auto& t : j["terms"]) {
        if (!t.is_array() || t.size() != 2 || !t[0].is_array())
            throw ValidationError("BAD_POLY", "each term is [[exponents...], coefficient]");
        Multiindex a;
        for (const auto& e : t[0]) {
            if (!e.is_number_unsigned()) throw ValidationError("BAD_POLY", "exponents must be nonnegative integers");
            a.push_back(e.get<unsigned>());
        }
        if (a.size() != p.nvars()) throw ValidationError("BAD_POLY", "exponent length differs from nvars");
        Rational c = t[1].is_string() ? parse_rational(t[1].get<std::string>())
                                      : t[1].is_number_integer() ? Rational(t[1].get<long>())
                                                                 : throw ValidationError("BAD_POLY", "coefficient must be a string or integer");
        p.add_term(a, c);
    }
    return p;
}

std::string poly_to_string(const MultiPoly& p) {
    if (p.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [a, c] = *it;
        Rational mag = abs(c);
        os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + "));
        first = false;
        bool constant = total_degree(a) == 0;
        if (mag != 1 || constant) os << to_string(mag) << (constant ? "" : "*");
        bool first_var = true;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0) continue;
            if (!first_var) os << "*";
            first_var = false;
            os << "x" << (i + 1);
            if (a[i] > 1) os << "^" << a[i];
        }
    }
    return os.str();
}

}  // namespace qdec
