#include "qdec/subspace.hpp"
#include "qdec/quadforms.hpp"
#include "qdec/sampling.hpp"

namespace qdec {

Subspace::Subspace(std::size_t ambient, std::vector<RVec> basis) : ambient_(ambient), basis_(std::move(basis)) {
    for (const auto& v : basis_)
        if (v.size() != ambient_) throw ValidationError("SHAPE", "basis vector length differs from ambient dimension");
    if (!basis_.empty() && rank(RMatrix::from_rows(basis_)) != basis_.size())
        throw ValidationError("DEPENDENT_BASIS", "subspace basis is linearly dependent");
}

Subspace Subspace::span(std::size_t ambient, const std::vector<RVec>& vectors) {
    for (const auto& v : vectors)
        if (v.size() != ambient) throw ValidationError("SHAPE", "vector length differs from ambient dimension");
    if (vectors.empty()) return zero(ambient);
    Subspace s;
    s.ambient_ = ambient;
    s.basis_ = row_basis(RMatrix::from_rows(vectors));
    return s;
}

Subspace Subspace::full(std::size_t ambient) {
    std::vector<RVec> rows;
    for (std::size_t i = 0; i < ambient; ++i) rows.push_back(RMatrix::identity(ambient).row(i));
    return Subspace(ambient, rows);
}

Subspace Subspace::coordinate(std::size_t ambient, const std::vector<std::size_t>& axes) {
    std::vector<RVec> rows;
    for (auto a : axes) {
        if (a >= ambient) throw ValidationError("RANGE", "coordinate axis out of range");
        RVec e(ambient);
        e[a] = 1;
        rows.push_back(e);
    }
    return Subspace(ambient, rows);
}

bool Subspace::contains(const RVec& v) const {
    if (v.size() != ambient_) throw Error("SHAPE", "vector length differs from ambient dimension");
    auto rows = basis_;
    rows.push_back(v);
    return rank(RMatrix::from_rows(rows)) == basis_.size();
}

bool Subspace::operator==(const Subspace& o) const {
    if (ambient_ != o.ambient_ || dim() != o.dim()) return false;
    for (const auto& v : o.basis_)
        if (!contains(v)) return false;
    return true;
}

std::string Subspace::key() const {
    std::string k = std::to_string(ambient_) + ":";
    if (basis_.empty()) return k;
    for (const auto& row : row_basis(RMatrix::from_rows(basis_))) {
        for (const auto& x : row) k += to_string(x) + ",";
        k += ";";
    }
    return k;
}

Subspace sum(const Subspace& a, const Subspace& b) {
    if (a.ambient() != b.ambient()) throw Error("SHAPE", "subspaces live in different ambient spaces");
    auto rows = a.basis();
    rows.insert(rows.end(), b.basis().begin(), b.basis().end());
    return Subspace::span(a.ambient(), rows);
}

Subspace orth_complement(const Subspace& a) {
    if (a.dim() == 0) return Subspace::full(a.ambient());
    return Subspace(a.ambient(), null_space(RMatrix::from_rows(a.basis())));
}

Subspace intersect(const Subspace& a, const Subspace& b) {
    return orth_complement(sum(orth_complement(a), orth_complement(b)));
}

Subspace first_factor(std::size_t d, std::size_t n) {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < d; ++i) axes.push_back(i);
    return Subspace::coordinate(d + n, axes);
}

Subspace second_factor(std::size_t d, std::size_t n) {
    std::vector<std::size_t> axes;
    for (std::size_t i = d; i < d + n; ++i) axes.push_back(i);
    return Subspace::coordinate(d + n, axes);
}

Subspace random_subspace(std::size_t ambient, std::size_t k, Rng& rng, long max_den) {
    if (k > ambient) throw ValidationError("RANGE", "subspace dimension exceeds ambient dimension");
    for (;;) {
        std::vector<std::vector<double>> g(k, std::vector<double>(ambient));
        for (auto& row : g)
            for (auto& x : row) x = normal(rng);
        if (!orthonormalize(g)) continue;
        std::vector<RVec> rows;
        for (const auto& row : g) rows.push_back(rationalize(row, max_den));
        if (k == 0 || rank(RMatrix::from_rows(rows)) == k) return Subspace(ambient, rows);
    }
}

nlohmann::json subspace_to_json(const Subspace& V) {
    nlohmann::json basis = nlohmann::json::array();
    for (const auto& v : V.basis()) basis.push_back(rvec_to_json(v));
    return {{"ambient", V.ambient()}, {"basis", basis}};
}

Subspace subspace_from_json(const nlohmann::json& j, std::size_t ambient) {
    if (j.is_object()) {
        if (!j.contains("basis")) throw ValidationError("SCHEMA", "subspace object needs a basis");
        std::size_t amb = j.value("ambient", ambient);
        std::vector<RVec> rows;
        for (const auto& r : j.at("basis")) rows.push_back(rvec_from_json(r));
        if (amb == 0 && !rows.empty()) amb = rows[0].size();
        return Subspace(amb, rows);
    }
    if (j.is_array()) {
        std::vector<RVec> rows;
        for (const auto& r : j) rows.push_back(rvec_from_json(r));
        if (ambient == 0 && !rows.empty()) ambient = rows[0].size();
        return Subspace(ambient, rows);
    }
    throw ValidationError("SCHEMA", "subspace must be an object or a list of vectors");
}

}  // namespace qdec
