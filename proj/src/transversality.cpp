#include "qdec/transversality.hpp"
#include "qdec/parallel.hpp"
#include "qdec/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>

namespace qdec {

Subspace tangent_space(const QuadTuple& T, const RVec& t) { return Subspace(T.d + T.n, tangent_frame(T, t)); }

Subspace normal_space(const QuadTuple& T, const RVec& t) { return orth_complement(tangent_space(T, t)); }

std::size_t proj_dim(const Subspace& V, const Subspace& W) {
    if (V.ambient() != W.ambient()) throw Error("SHAPE", "subspaces live in different ambient spaces");
    if (V.dim() == 0 || W.dim() == 0) return 0;
    RMatrix g(V.dim(), W.dim());
    for (std::size_t i = 0; i < V.dim(); ++i)
        for (std::size_t j = 0; j < W.dim(); ++j) g(i, j) = dot(V.basis()[i], W.basis()[j]);
    return rank(g);
}

std::size_t proj_dim(const QuadTuple& T, const Subspace& V, const RVec& t) {
    if (V.ambient() != T.d + T.n) throw ValidationError("SHAPE", "subspace ambient dimension must be d+n");
    return proj_dim(V, tangent_space(T, t));
}

namespace {

// Rows w + gradP(t) z for each vector (w, z), as linear polynomials in t.
PolyMatrix projection_matrix(const QuadTuple& T, const std::vector<RVec>& rows) {
    PolyMatrix m(rows.size(), T.d, T.d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < T.d; ++j) {
            MultiPoly e = MultiPoly::constant(T.d, rows[i][j]);
            for (std::size_t l = 0; l < T.d; ++l) {
                Rational c = 0;
                for (std::size_t k = 0; k < T.n; ++k) c += 2 * rows[i][T.d + k] * T.forms[k](j, l);
                if (c != 0) e += MultiPoly::variable(T.d, l) * c;
            }
            m(i, j) = e;
        }
    return m;
}

// Basis of V split into vectors with zero second component and vectors whose second
// components are independent.
std::pair<std::vector<RVec>, std::vector<RVec>> split_basis(const Subspace& V, std::size_t d, std::size_t n) {
    std::vector<RVec> permuted;
    for (const auto& v : V.basis()) {
        RVec p(d + n);
        for (std::size_t k = 0; k < n; ++k) p[k] = v[d + k];
        for (std::size_t k = 0; k < d; ++k) p[n + k] = v[k];
        permuted.push_back(std::move(p));
    }
    std::vector<RVec> flat, lifted;
    if (permuted.empty()) return {flat, lifted};
    for (const auto& p : row_basis(RMatrix::from_rows(permuted))) {
        RVec v(d + n);
        for (std::size_t k = 0; k < n; ++k) v[d + k] = p[k];
        for (std::size_t k = 0; k < d; ++k) v[k] = p[n + k];
        bool zero_z = true;
        for (std::size_t k = 0; k < n; ++k)
            if (p[k] != 0) zero_z = false;
        (zero_z ? flat : lifted).push_back(std::move(v));
    }
    return {flat, lifted};
}

// Largest r with a nonzero r-minor, and that minor.
std::pair<std::size_t, MultiPoly> generic_rank(const PolyMatrix& m) {
    for (std::size_t r = std::min(m.rows(), m.cols()); r > 0; --r)
        for (auto& p : polymat_minors(m, r))
            if (!p.is_zero()) return {r, p};
    return {0, MultiPoly::constant(m.nvars(), 1)};
}

}  // namespace

MultiPoly proj_dim_certificate(const QuadTuple& T, const Subspace& V, std::size_t H1, std::size_t H2) {
    if (V.ambient() != T.d + T.n) throw ValidationError("SHAPE", "subspace ambient dimension must be d+n");
    auto [flat, lifted] = split_basis(V, T.d, T.n);
    std::size_t h1_max = std::min(flat.size(), T.d > T.n ? T.d - T.n : std::size_t{0});
    if (H1 > h1_max) throw ValidationError("RANGE", "H1 exceeds min(dim(V cap S1), d-n)");
    if (H2 > lifted.size()) throw ValidationError("RANGE", "H2 exceeds dim(V/S1)");
    if (H1 + H2 == 0) return MultiPoly::constant(T.d, 1);
    std::vector<RVec> rows(flat.begin(), flat.begin() + static_cast<long>(H1));
    rows.insert(rows.end(), lifted.begin(), lifted.begin() + static_cast<long>(H2));
    for (auto& p : polymat_minors(projection_matrix(T, rows), H1 + H2))
        if (!p.is_zero()) return p;
    throw Error("NO_CERTIFICATE", "all minors vanish identically");
}

bool bcct_holds(const std::vector<Subspace>& spaces, const Rational& c, const Subspace& V) {
    Rational total = 0;
    for (const auto& W : spaces) total += proj_dim(V, W);
    return Rational(static_cast<long>(V.dim())) <= c * total;
}

bool bcct_check(const QuadTuple& T, const std::vector<RVec>& ts, const Subspace& V) {
    if (ts.empty()) throw ValidationError("RANGE", "at least one point is required");
    std::vector<Subspace> spaces;
    for (const auto& t : ts) spaces.push_back(tangent_space(T, t));
    Rational c = Q(static_cast<long>(T.d + T.n), static_cast<long>(T.d * ts.size()));
    return bcct_holds(spaces, c, V);
}

namespace {

class CandidateSet {
public:
    explicit CandidateSet(std::size_t cap) : cap_(cap) {}
    bool add(const Subspace& V) {
        if (V.dim() == 0 || list_.size() >= cap_) return false;
        if (!seen_.emplace(V.key(), list_.size()).second) return false;
        list_.push_back(V);
        return true;
    }
    const std::vector<Subspace>& list() const { return list_; }
    bool full() const { return list_.size() >= cap_; }

private:
    std::size_t cap_;
    std::map<std::string, std::size_t> seen_;
    std::vector<Subspace> list_;
};

BcctResult search(const std::vector<Subspace>& spaces, const Rational& c, const std::vector<Subspace>& extra,
                  const BcctConfig& cfg) {
    if (spaces.empty()) throw ValidationError("RANGE", "at least one space is required");
    std::size_t N = spaces[0].ambient();
    CandidateSet lattice(cfg.lattice_cap);
    for (const auto& W : spaces) {
        lattice.add(orth_complement(W));
        lattice.add(W);
    }
    for (std::size_t i = 0; i < lattice.list().size() && !lattice.full(); ++i)
        for (std::size_t j = 0; j < i && !lattice.full(); ++j) {
            Subspace a = lattice.list()[i], b = lattice.list()[j];
            lattice.add(sum(a, b));
            lattice.add(intersect(a, b));
        }
    std::vector<Subspace> candidates = lattice.list();
    candidates.insert(candidates.end(), extra.begin(), extra.end());
    if (N <= 6)
        for (std::size_t k = 1; k <= N; ++k)
            for (const auto& axes : subsets(N, k)) candidates.push_back(Subspace::coordinate(N, axes));
    Rng rng(cfg.seed);
    for (std::size_t k = 1; k < N; ++k)
        for (unsigned r = 0; r < cfg.random_per_dim; ++r) candidates.push_back(random_subspace(N, k, rng));

    BcctResult res;
    for (const auto& V : candidates) {
        ++res.candidates;
        if (!bcct_holds(spaces, c, V)) {
            res.feasible = false;
            res.witness = V;
            return res;
        }
    }
    return res;
}

}  // namespace

BcctResult bcct_sampled(const std::vector<Subspace>& spaces, const Rational& c, const BcctConfig& cfg) {
    return search(spaces, c, {}, cfg);
}

BcctResult bcct_sampled(const QuadTuple& T, const std::vector<RVec>& ts, const BcctConfig& cfg) {
    if (ts.empty()) throw ValidationError("RANGE", "at least one point is required");
    std::vector<Subspace> spaces, extra;
    std::size_t N = T.d + T.n;
    extra.push_back(first_factor(T.d, T.n));
    extra.push_back(second_factor(T.d, T.n));
    for (const auto& t : ts) {
        spaces.push_back(tangent_space(T, t));
        for (const auto& v : tangent_frame(T, t)) extra.push_back(Subspace(N, {v}));
        extra.push_back(intersect(spaces.back(), extra[0]));
    }
    Rational c = Q(static_cast<long>(N), static_cast<long>(T.d * ts.size()));
    return search(spaces, c, extra, cfg);
}

BLDatum BLDatum::make(std::size_t ambient, std::vector<std::vector<std::vector<double>>> bases) {
    if (bases.empty()) throw ValidationError("DIMENSION_MISMATCH", "at least one subspace is required");
    BLDatum B;
    B.ambient = ambient;
    B.dim = bases[0].size();
    for (const auto& b : bases) {
        if (b.size() != B.dim) throw ValidationError("DIMENSION_MISMATCH", "all subspaces must have the same dimension");
        for (const auto& row : b)
            if (row.size() != ambient) throw ValidationError("DIMENSION_MISMATCH", "basis vector length differs from ambient");
    }
    if (B.dim == 0) throw ValidationError("DIMENSION_MISMATCH", "subspaces must be nonzero");
    B.bases = std::move(bases);
    B.c = static_cast<double>(ambient) / static_cast<double>(B.dim * B.bases.size());
    return B;
}

BLDatum BLDatum::from_subspaces(const std::vector<Subspace>& spaces) {
    if (spaces.empty()) throw ValidationError("DIMENSION_MISMATCH", "at least one subspace is required");
    std::vector<std::vector<std::vector<double>>> bases;
    for (const auto& V : spaces) {
        if (V.ambient() != spaces[0].ambient()) throw ValidationError("DIMENSION_MISMATCH", "ambient dimensions differ");
        std::vector<std::vector<double>> b;
        for (const auto& v : V.basis()) {
            std::vector<double> row;
            for (const auto& x : v) row.push_back(to_double(x));
            b.push_back(std::move(row));
        }
        bases.push_back(std::move(b));
    }
    return make(spaces[0].ambient(), std::move(bases));
}

BLResult bl_constant_gaussian(const BLDatum& B, const BLConfig& cfg) {
    using Eigen::MatrixXd;
    const auto N = static_cast<Eigen::Index>(B.ambient);
    const auto k = static_cast<Eigen::Index>(B.dim);
    std::vector<MatrixXd> P;
    for (const auto& basis : B.bases) {
        auto rows = basis;
        if (!orthonormalize(rows)) throw ValidationError("DIMENSION_MISMATCH", "subspace basis is rank deficient");
        MatrixXd m(k, N);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < N; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        P.push_back(std::move(m));
    }
    std::vector<MatrixXd> A(P.size(), MatrixXd::Identity(k, k));
    BLResult res;
    double prev = 0.0;
    for (long it = 0; it < cfg.max_iter; ++it) {
        res.iterations = it;
        MatrixXd M = MatrixXd::Zero(N, N);
        for (std::size_t j = 0; j < P.size(); ++j) M += B.c * P[j].transpose() * A[j] * P[j];
        Eigen::SelfAdjointEigenSolver<MatrixXd> em(M);
        double mmax = em.eigenvalues().maxCoeff(), mmin = em.eigenvalues().minCoeff();
        double amin = INFINITY, amax = 0.0, log_num = 0.0;
        for (const auto& a : A) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> ea(a);
            amin = std::min(amin, ea.eigenvalues().minCoeff());
            amax = std::max(amax, ea.eigenvalues().maxCoeff());
            log_num += 0.5 * B.c * ea.eigenvalues().array().log().sum();
        }
        if (!(mmin > cfg.conditioning * mmax) || !(amin > cfg.conditioning * amax)) {
            res.divergent = true;
            res.value = INFINITY;
            return res;
        }
        double value = std::exp(log_num - 0.5 * em.eigenvalues().array().log().sum());
        if (!(value <= cfg.divergence)) {
            res.divergent = true;
            res.value = INFINITY;
            return res;
        }
        res.value = value;
        if (it > 0 && std::fabs(value - prev) <= cfg.rel_tol * value) {
            res.converged = true;
            return res;
        }
        prev = value;
        MatrixXd Minv = em.eigenvectors() * em.eigenvalues().cwiseInverse().asDiagonal() * em.eigenvectors().transpose();
        double log_det = 0.0;
        for (std::size_t j = 0; j < P.size(); ++j) {
            MatrixXd S = P[j] * Minv * P[j].transpose();
            A[j] = S.inverse();
            A[j] = 0.5 * (A[j] + A[j].transpose());
            log_det += std::log(A[j].determinant());
        }
        double scale = std::exp(-log_det / static_cast<double>(k * static_cast<Eigen::Index>(P.size())));
        for (auto& a : A) a *= scale;
    }
    return res;
}

namespace {

std::vector<RVec> cap_points(const Cap& cap, unsigned random_points, Rng& rng) {
    std::size_t d = cap.anchor.size();
    std::vector<RVec> pts;
    Rational s = cap.side();
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        RVec p = cap.anchor;
        for (std::size_t i = 0; i < d; ++i)
            if (mask >> i & 1) p[i] += s;
        pts.push_back(std::move(p));
    }
    pts.push_back(cap.center());
    for (unsigned r = 0; r < random_points; ++r) {
        RVec p = cap.anchor;
        for (std::size_t i = 0; i < d; ++i) p[i] += s * Q(uniform_int(rng, 0, 1024), 1024);
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace

TransversalityReport nu_transverse(const QuadTuple& T, const std::vector<Cap>& caps, const TransversalityConfig& cfg) {
    if (caps.empty()) throw ValidationError("EMPTY_CAPS", "cap list is empty");
    for (const auto& c : caps) {
        if (c.anchor.size() != T.d) throw ValidationError("SHAPE", "cap dimension differs from d");
        if (c.level != caps[0].level) throw ValidationError("SCALE_MISMATCH", "caps must share a common scale");
    }
    Rng rng(cfg.seed);
    std::vector<std::vector<RVec>> pts;
    for (const auto& c : caps) pts.push_back(cap_points(c, cfg.random_points, rng));
    std::size_t count = pts[0].size();

    struct Outcome {
        BcctResult bcct;
        BLResult bl;
    };
    std::vector<Outcome> out(count);
    parallel_for(count, [&](std::size_t k) {
        std::vector<RVec> ts;
        for (const auto& p : pts) ts.push_back(p[k]);
        BcctConfig bc = cfg.bcct;
        bc.seed = cfg.bcct.seed + k;
        out[k].bcct = bcct_sampled(T, ts, bc);
        std::vector<Subspace> spaces;
        for (const auto& t : ts) spaces.push_back(tangent_space(T, t));
        out[k].bl = bl_constant_gaussian(BLDatum::from_subspaces(spaces), cfg.bl);
    });

    TransversalityReport rep;
    rep.samples = count;
    rep.seed = cfg.seed;
    for (std::size_t k = 0; k < count; ++k) {
        if (!out[k].bcct.feasible || out[k].bl.divergent) {
            rep.transverse = false;
            rep.reason = !out[k].bcct.feasible ? "BCCT_INFEASIBLE" : "BL_DIVERGENT";
            rep.witness = out[k].bcct.witness;
            for (const auto& p : pts) rep.witness_points.push_back(p[k]);
            rep.max_bl = INFINITY;
            rep.nu_hat = 0.0;
            return rep;
        }
        rep.max_bl = std::max(rep.max_bl, out[k].bl.value);
    }
    rep.nu_hat = 1.0 / rep.max_bl;
    rep.transverse = rep.nu_hat >= cfg.nu_min;
    rep.reason = rep.transverse ? "BL_FINITE" : "NU_BELOW_FLOOR";
    return rep;
}

nlohmann::json report_to_json(const TransversalityReport& r) {
    nlohmann::json j;
    j["verdict"] = r.transverse ? "TRANSVERSE" : "NOT_TRANSVERSE";
    j["reason"] = r.reason;
    j["nu_hat"] = r.nu_hat;
    j["max_bl"] = std::isfinite(r.max_bl) ? nlohmann::json(r.max_bl) : nlohmann::json("inf");
    j["witness"] = r.witness ? subspace_to_json(*r.witness) : nlohmann::json(nullptr);
    j["witness_points"] = nlohmann::json::array();
    for (const auto& p : r.witness_points) j["witness_points"].push_back(rvec_to_json(p));
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    return j;
}

Rational compute_theta(long d, long n) {
    if (d < 1 || n < 1) throw ValidationError("RANGE", "d and n must be positive");
    Rational best = 0;
    for (long k = 1; k <= d + n; ++k) {
        Rational x = Q(k * d, d + n);
        mpz_class fl;
        mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
        Rational r = x / Rational(fl + 1);
        if (r > best) best = r;
    }
    return 1 - best;
}

AuditReport hypothesis_transverse_audit(const QuadTuple& T, const AuditConfig& cfg) {
    std::size_t d = T.d, n = T.n, N = d + n;
    AuditReport rep;
    rep.seed = cfg.seed;
    rep.lemma_backed = (n == 1) || (n == 2 && d >= 2 && d <= 4) || (n == 3 && d == 3);
    rep.degree_bound = n == 1 ? 1 : (n == 2 && d >= 3 ? 2 : static_cast<unsigned>(d));
    for (std::size_t k = 1; k < N; ++k) rep.tallies.push_back(AuditTally{k, 0, 0, 0, 0, 0});

    std::vector<Subspace> candidates{first_factor(d, n), second_factor(d, n)};
    if (N <= 6)
        for (std::size_t k = 1; k < N; ++k)
            for (const auto& axes : subsets(N, k)) candidates.push_back(Subspace::coordinate(N, axes));
    Rng rng(cfg.seed);
    for (std::size_t k = 1; k < N; ++k)
        for (unsigned r = 0; r < cfg.per_dim; ++r) candidates.push_back(random_subspace(N, k, rng));

    Subspace S1 = first_factor(d, n);
    for (const auto& V : candidates) {
        auto& tally = rep.tallies[V.dim() - 1];
        Rational need = Q(static_cast<long>(d * V.dim()), static_cast<long>(N));
        std::size_t flat_dim = intersect(V, S1).dim();
        if (Rational(static_cast<long>(flat_dim)) >= need) {
            ++tally.first_alternative;
            continue;
        }
        std::size_t H2 = V.dim() - flat_dim, H1 = std::min(flat_dim, d > n ? d - n : std::size_t{0});
        std::optional<MultiPoly> cert;
        if (Rational(static_cast<long>(H1 + H2)) > need) {
            try {
                cert = proj_dim_certificate(T, V, H1, H2);
            } catch (const Error& e) {
                if (e.code() != "NO_CERTIFICATE") throw;
            }
        }
        if (!cert) {
            auto [g, minor] = generic_rank(projection_matrix(T, V.basis()));
            if (Rational(static_cast<long>(g)) > need) {
                cert = minor;
            } else if (Rational(static_cast<long>(g)) == need) {
                ++tally.unknown;
                continue;
            } else {
                ++tally.failed;
                rep.failures.push_back(V);
                continue;
            }
        }
        ++tally.second_alternative;
        tally.max_certificate_degree = std::max(tally.max_certificate_degree, cert->degree());
    }
    return rep;
}

nlohmann::json report_to_json(const AuditReport& r) {
    nlohmann::json j;
    j["lemma_backed"] = r.lemma_backed;
    j["degree_bound"] = r.degree_bound;
    j["seed"] = r.seed;
    j["tallies"] = nlohmann::json::array();
    for (const auto& t : r.tallies)
        j["tallies"].push_back({{"dim", t.dim},
                                {"first_alternative", t.first_alternative},
                                {"second_alternative", t.second_alternative},
                                {"unknown", t.unknown},
                                {"failed", t.failed},
                                {"max_certificate_degree", t.max_certificate_degree}});
    j["failures"] = nlohmann::json::array();
    for (const auto& V : r.failures) j["failures"].push_back(subspace_to_json(V));
    return j;
}

}  // namespace qdec
