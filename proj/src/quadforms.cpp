#include "qdec/quadforms.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace qdec {

QuadTuple QuadTuple::make(std::size_t d, std::size_t n, std::vector<RMatrix> forms) {
    if (d < 1) throw ValidationError("BAD_FORMS", "d must be at least 1");
    if (n < 1) throw ValidationError("BAD_FORMS", "n must be at least 1");
    if (forms.size() != n) throw ValidationError("BAD_FORMS", "expected n forms");
    for (const auto& m : forms) {
        if (m.rows() != d || m.cols() != d) throw ValidationError("BAD_FORMS", "each form must be d x d");
        if (!m.is_symmetric()) throw ValidationError("BAD_FORMS", "forms must be symmetric");
    }
    return QuadTuple{d, n, std::move(forms)};
}

Rational QuadTuple::eval(std::size_t j, const RVec& t) const {
    if (t.size() != d) throw Error("DIMENSION", "point dimension differs from d");
    return dot(t, forms[j] * t);
}

RVec QuadTuple::eval_all(const RVec& t) const {
    RVec r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = eval(j, t);
    return r;
}

std::vector<double> QuadTuple::eval_all(const std::vector<double>& t) const {
    std::vector<double> r(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) r[j] += forms[j](a, b).get_d() * t[a] * t[b];
    return r;
}

MultiPoly QuadTuple::form_poly(std::size_t j) const {
    MultiPoly p(d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            Multiindex e(d, 0);
            ++e[a];
            ++e[b];
            p.add_term(e, forms[j](a, b));
        }
    return p;
}

RVec Cap::center() const {
    RVec c = anchor;
    Rational h = side() / 2;
    for (auto& x : c) x += h;
    return c;
}

std::vector<double> Cap::center_double() const {
    std::vector<double> c;
    for (const auto& x : center()) c.push_back(x.get_d());
    return c;
}

bool Cap::operator<(const Cap& o) const {
    if (level != o.level) return level < o.level;
    return anchor < o.anchor;
}

bool Cap::contains(const Cap& inner) const {
    Rational s = side(), si = inner.side();
    for (std::size_t i = 0; i < anchor.size(); ++i)
        if (inner.anchor[i] < anchor[i] || inner.anchor[i] + si > anchor[i] + s) return false;
    return true;
}

bool Cap::dilate_contains(const Rational& factor, const Cap& inner, const Rational& inner_factor) const {
    RVec c = center(), ci = inner.center();
    Rational h = factor * side() / 2, hi = inner_factor * inner.side() / 2;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (ci[i] - hi < c[i] - h || ci[i] + hi > c[i] + h) return false;
    return true;
}

namespace {

// Coefficient vector y of x - center in the generator basis.
RVec box_coords(const UncertaintyBox& b, const RVec& x) {
    RVec rhs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) rhs[i] = x[i] - b.center[i];
    return solve(b.generator, rhs);
}

RMatrix inverse(const RMatrix& m) {
    std::size_t n = m.rows();
    RMatrix inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        RVec e(n);
        e[j] = 1;
        RVec col = solve(m, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

}  // namespace

bool UncertaintyBox::contains(const RVec& x) const {
    if (x.size() != center.size()) throw Error("DIMENSION", "point dimension differs from box");
    for (const auto& y : box_coords(*this, x))
        if (abs(y) > C) return false;
    return true;
}

bool UncertaintyBox::contains(const UncertaintyBox& inner) const {
    RMatrix ginv = inverse(generator);
    RVec shift(center.size());
    for (std::size_t i = 0; i < shift.size(); ++i) shift[i] = inner.center[i] - center[i];
    RVec off = ginv * shift;
    RMatrix rel = ginv * inner.generator;
    for (std::size_t i = 0; i < rel.rows(); ++i) {
        Rational reach = abs(off[i]);
        for (std::size_t k = 0; k < rel.cols(); ++k) reach += inner.C * abs(rel(i, k));
        if (reach > C) return false;
    }
    return true;
}

Hyperplane Hyperplane::graph(const RVec& coeffs) {
    Hyperplane h;
    for (const auto& c : coeffs) h.normal.push_back(-c);
    h.normal.push_back(1);
    return h;
}

std::size_t Hyperplane::default_graph_var() const {
    std::size_t d = normal.size();
    if (d == 0) throw ValidationError("BAD_HYPERPLANE", "empty normal");
    const Rational& last = normal[d - 1];
    if (last != 0) {
        Rational grad2 = 0;
        for (std::size_t i = 0; i + 1 < d; ++i) grad2 += (normal[i] / last) * (normal[i] / last);
        if (grad2 <= 1) return d - 1;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (abs(normal[i]) > abs(normal[best])) best = i;
    if (normal[best] == 0) throw ValidationError("BAD_HYPERPLANE", "zero normal vector");
    return best;
}

std::vector<RVec> Hyperplane::basis() const {
    std::size_t d = normal.size();
    std::size_t k = default_graph_var();
    std::vector<RVec> cols;
    for (std::size_t i = 0; i < d; ++i) {
        if (i == k) continue;
        RVec v(d);
        v[i] = 1;
        v[k] = -normal[i] / normal[k];
        cols.push_back(std::move(v));
    }
    return cols;
}

RMatrix gradient_matrix(const QuadTuple& T, const RVec& a) {
    if (a.size() != T.d) throw Error("DIMENSION", "point dimension differs from d");
    RMatrix g(T.d, T.n);
    for (std::size_t j = 0; j < T.n; ++j) {
        RVec col = T.forms[j] * a;
        for (std::size_t i = 0; i < T.d; ++i) g(i, j) = 2 * col[i];
    }
    return g;
}

std::vector<RVec> tangent_frame(const QuadTuple& T, const RVec& t) {
    RMatrix g = gradient_matrix(T, t);
    std::vector<RVec> frame;
    for (std::size_t i = 0; i < T.d; ++i) {
        RVec v(T.d + T.n);
        v[i] = 1;
        for (std::size_t j = 0; j < T.n; ++j) v[T.d + j] = g(i, j);
        frame.push_back(std::move(v));
    }
    return frame;
}

Rational minimal_C(const QuadTuple& T) {
    Rational m = 0;
    for (const auto& f : T.forms) m = std::max(m, f.inf_norm());
    return 1 + Rational(static_cast<long>(T.d)) * m * Rational(static_cast<long>(T.d + 2));
}

Reparam reparam(const Cap& cap, const QuadTuple& T) {
    std::size_t d = T.d, n = T.n, N = d + n;
    Reparam r;
    r.anchor = cap.anchor;
    r.grad = gradient_matrix(T, cap.anchor);
    Rational s = cap.side(), s2 = s * s;
    r.L = RMatrix(N, N);
    for (std::size_t i = 0; i < d; ++i) {
        r.L(i, i) = s;
        for (std::size_t j = 0; j < n; ++j) r.L(i, d + j) = s * r.grad(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) r.L(d + j, d + j) = s2;
    return r;
}

UncertaintyBox uncertainty_box(const Cap& cap, const QuadTuple& T, const Rational& C) {
    if (C < minimal_C(T)) throw Error("C_TOO_SMALL", "C is below the admissible minimum " + to_string(minimal_C(T)));
    Reparam r = reparam(cap, T);
    UncertaintyBox b;
    b.center = cap.anchor;
    for (const auto& v : T.eval_all(cap.anchor)) b.center.push_back(v);
    b.generator = r.L.transpose();
    b.C = C;
    return b;
}

QuadTuple restrict_to_hyperplane(const QuadTuple& T, const Hyperplane& H) {
    if (H.normal.size() != T.d) throw Error("DIMENSION", "hyperplane dimension differs from d");
    if (T.d < 2) throw Error("DIMENSION", "cannot restrict a one-dimensional tuple");
    auto cols = H.basis();
    RMatrix S(T.d, T.d - 1);
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < T.d; ++i) S(i, j) = cols[j][i];
    RMatrix St = S.transpose();
    std::vector<RMatrix> out;
    for (const auto& m : T.forms) out.push_back(St * m * S);
    return QuadTuple::make(T.d - 1, T.n, std::move(out));
}

std::vector<Cap> caps_partition(std::size_t d, int level) {
    Cap unit;
    unit.anchor = RVec(d, Rational(0));
    unit.level = 0;
    return subcaps(unit, level);
}

std::vector<Cap> subcaps(const Cap& Q, int level) {
    if (level < Q.level) throw ValidationError("BAD_SCALE", "subcap scale exceeds the parent side");
    if (level > 30) throw ValidationError("BAD_SCALE", "scale finer than 2^-30");
    std::size_t d = Q.anchor.size();
    long per = 1L << (level - Q.level);
    Rational s = dyadic(level);
    std::vector<Cap> out;
    std::vector<long> idx(d, 0);
    while (true) {
        Cap c;
        c.level = level;
        c.anchor.resize(d);
        for (std::size_t i = 0; i < d; ++i) c.anchor[i] = Q.anchor[i] + s * Rational(idx[i]);
        out.push_back(std::move(c));
        std::size_t i = d;
        while (i > 0) {
            --i;
            if (++idx[i] < per) break;
            idx[i] = 0;
            if (i == 0) return out;
        }
        if (d == 0) return out;
    }
}

int dyadic_level(const Rational& delta) {
    if (delta <= 0 || delta > 1 || delta.get_num() != 1)
        throw ValidationError("BAD_SCALE", "scale must be 2^-k with k >= 0, got " + to_string(delta));
    mpz_class den = delta.get_den();
    if (mpz_popcount(den.get_mpz_t()) != 1) throw ValidationError("BAD_SCALE", "scale is not dyadic: " + to_string(delta));
    return static_cast<int>(mpz_sizeinbase(den.get_mpz_t(), 2)) - 1;
}

QuadTuple parabola(std::size_t d) { return QuadTuple::make(d, 1, {RMatrix::identity(d)}); }

QuadTuple diagonal_tuple(const std::vector<RVec>& diagonals) {
    if (diagonals.empty()) throw ValidationError("BAD_FORMS", "no diagonal given");
    std::size_t d = diagonals[0].size();
    std::vector<RMatrix> forms;
    for (const auto& diag : diagonals) {
        if (diag.size() != d) throw ValidationError("BAD_FORMS", "diagonals of unequal length");
        RMatrix m(d, d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = diag[i];
        forms.push_back(std::move(m));
    }
    std::size_t n = forms.size();
    return QuadTuple::make(d, n, std::move(forms));
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

RVec parse_list(const std::string& s) {
    RVec v;
    for (const auto& tok : split(s, ','))
        if (!tok.empty()) v.push_back(parse_rational(tok));
    return v;
}

}  // namespace

// Presets: "parabola(d)", "diag(a1,..,ad; b1,..,bd; ...)" (without ';' the list is split into
// two halves), "BD-d2n2(A1,A2,A3,B1,B2,B3)" for A1 t1^2 + 2 A2 t1 t2 + A3 t2^2 and likewise B.
QuadTuple parse_preset(const std::string& spec) {
    auto open = spec.find('('), close = spec.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ValidationError("BAD_PRESET", "preset must look like name(args): " + spec);
    std::string name = spec.substr(0, open), args = spec.substr(open + 1, close - open - 1);
    if (name == "parabola") {
        long d = 0;
        try {
            d = std::stol(args);
        } catch (...) {
            throw ValidationError("BAD_PRESET", "parabola expects an integer dimension");
        }
        if (d < 1 || d > 64) throw ValidationError("BAD_PRESET", "parabola dimension out of range");
        return parabola(static_cast<std::size_t>(d));
    }
    if (name == "diag") {
        std::vector<RVec> diags;
        if (args.find(';') != std::string::npos) {
            for (const auto& part : split(args, ';')) diags.push_back(parse_list(part));
        } else {
            RVec all = parse_list(args);
            if (all.empty() || all.size() % 2) throw ValidationError("BAD_PRESET", "diag needs 2d values");
            std::size_t d = all.size() / 2;
            diags.emplace_back(all.begin(), all.begin() + static_cast<long>(d));
            diags.emplace_back(all.begin() + static_cast<long>(d), all.end());
        }
        return diagonal_tuple(diags);
    }
    if (name == "BD-d2n2") {
        RVec v = parse_list(args);
        if (v.size() != 6) throw ValidationError("BAD_PRESET", "BD-d2n2 needs six coefficients");
        RMatrix a = RMatrix::from_rows({{v[0], v[1]}, {v[1], v[2]}});
        RMatrix b = RMatrix::from_rows({{v[3], v[4]}, {v[4], v[5]}});
        RMatrix coef = RMatrix::from_rows({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
        if (rank(coef) != 2) throw ValidationError("BAD_PRESET", "BD-d2n2 coefficient matrix must have rank 2");
        return QuadTuple::make(2, 2, {a, b});
    }
    throw ValidationError("BAD_PRESET", "unknown preset '" + name + "'");
}

nlohmann::json rvec_to_json(const RVec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : v) a.push_back(to_string(x));
    return a;
}

RVec rvec_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ValidationError("BAD_VECTOR", "expected an array of rationals");
    RVec v;
    for (const auto& x : j) {
        if (x.is_string())
            v.push_back(parse_rational(x.get<std::string>()));
        else if (x.is_number_integer())
            v.push_back(Rational(x.get<long>()));
        else if (x.is_number_float())
            v.push_back(parse_rational(x.dump()));
        else
            throw ValidationError("BAD_VECTOR", "entries must be numbers or rational strings");
    }
    return v;
}

nlohmann::json tuple_to_json(const QuadTuple& T) {
    nlohmann::json forms = nlohmann::json::array();
    for (const auto& m : T.forms) {
        RVec flat;
        for (std::size_t i = 0; i < T.d; ++i)
            for (std::size_t k = 0; k < T.d; ++k) flat.push_back(m(i, k));
        forms.push_back(rvec_to_json(flat));
    }
    return {{"d", T.d}, {"n", T.n}, {"forms", forms}};
}

QuadTuple tuple_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("BAD_FORMS", "forms document must be an object");
    if (j.contains("preset")) {
        if (!j["preset"].is_string()) throw ValidationError("BAD_FORMS", "'preset' must be a string");
        return parse_preset(j["preset"].get<std::string>());
    }
    for (const char* key : {"d", "n", "forms"})
        if (!j.contains(key)) throw ValidationError("BAD_FORMS", std::string("missing key '") + key + "'");
    if (!j["d"].is_number_unsigned() || !j["n"].is_number_unsigned())
        throw ValidationError("BAD_FORMS", "'d' and 'n' must be positive integers");
    std::size_t d = j["d"].get<std::size_t>(), n = j["n"].get<std::size_t>();
    if (!j["forms"].is_array()) throw ValidationError("BAD_FORMS", "'forms' must be an array");
    std::vector<RMatrix> forms;
    for (const auto& f : j["forms"]) {
        RVec flat = rvec_from_json(f);
        if (flat.size() != d * d) throw ValidationError("BAD_FORMS", "each form needs d*d row-major entries");
        RMatrix m(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) m(i, k) = flat[i * d + k];
        forms.push_back(std::move(m));
    }
    return QuadTuple::make(d, n, std::move(forms));
}

}  // namespace qdec
