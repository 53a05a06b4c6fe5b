#include "qdec/hypotheses.hpp"

#include "qdec/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace qdec {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::PASS: return "PASS";
        case Verdict::FAIL: return "FAIL";
        case Verdict::LIKELY_PASS: return "LIKELY_PASS";
    }
    return "?";
}

nlohmann::json report_to_json(const HypothesisReport& r) {
    nlohmann::json j{{"check", r.check},
                     {"verdict", to_string(r.verdict)},
                     {"method", r.method},
                     {"samples", r.samples},
                     {"exact_checks", r.exact_checks},
                     {"confidence", r.confidence},
                     {"seed", r.seed}};
    if (!r.witness_w.empty()) {
        nlohmann::json w = nlohmann::json::array();
        for (const auto& v : r.witness_w) w.push_back(rvec_to_json(v));
        j["witness_w"] = w;
    }
    if (r.witness_h) j["witness_hyperplane"] = {{"normal", rvec_to_json(r.witness_h->normal)}, {"offset", to_string(r.witness_h->offset)}};
    return j;
}

namespace {

PolyMatrix gradient_polys(const QuadTuple& T) {
    PolyMatrix G(T.n, T.d, T.d);
    for (std::size_t j = 0; j < T.n; ++j)
        for (std::size_t i = 0; i < T.d; ++i) {
            MultiPoly row(T.d);
            for (std::size_t k = 0; k < T.d; ++k) {
                Multiindex e(T.d, 0);
                e[k] = 1;
                row.add_term(e, 2 * T.forms[j](i, k));
            }
            G(j, i) = row;
        }
    return G;
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& s, std::size_t d) {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < d; ++i)
        if (!std::binary_search(s.begin(), s.end(), i)) c.push_back(i);
    return c;
}

// Laplace expansion of det[G; W] along the gradient rows: det = sum_S sign_S g_S(t) q_S(W),
// with g_S the n-minor of G on columns S and q_S the complementary minor of W.
struct PluckerSystem {
    std::vector<std::vector<std::size_t>> subsets;
    RMatrix A;  // monomial x subset, signed coefficients of g_S
};

PluckerSystem plucker_system(const QuadTuple& T) {
    PluckerSystem ps;
    ps.subsets = subsets(T.d, T.n);
    PolyMatrix G = gradient_polys(T);
    std::vector<std::size_t> rows(T.n);
    for (std::size_t i = 0; i < T.n; ++i) rows[i] = i;
    std::map<Multiindex, std::size_t, GradedLex> mono;
    std::vector<MultiPoly> g;
    std::size_t base = T.n * (T.n - 1) / 2;
    for (const auto& S : ps.subsets) {
        std::size_t ssum = 0;
        for (auto s : S) ssum += s;
        MultiPoly m = poly_det(G.submatrix(rows, S));
        if ((ssum + base) % 2) m = -m;
        for (const auto& [a, c] : m.terms()) mono.try_emplace(a, mono.size());
        g.push_back(std::move(m));
    }
    ps.A = RMatrix(std::max<std::size_t>(mono.size(), 1), ps.subsets.size());
    for (std::size_t s = 0; s < g.size(); ++s)
        for (const auto& [a, c] : g[s].terms()) ps.A(mono.at(a), s) = c;
    return ps;
}

RVec complementary_minors(const PluckerSystem& ps, const std::vector<RVec>& w, std::size_t d) {
    RVec q(ps.subsets.size());
    for (std::size_t s = 0; s < ps.subsets.size(); ++s) {
        auto c = complement(ps.subsets[s], d);
        RMatrix m(w.size(), w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            for (std::size_t k = 0; k < c.size(); ++k) m(i, k) = w[i][c[k]];
        q[s] = w.empty() ? Rational(1) : det(m);
    }
    return q;
}

bool vanishes(const PluckerSystem& ps, const RVec& q) {
    RVec r = ps.A * q;
    return std::all_of(r.begin(), r.end(), [](const Rational& x) { return x == 0; });
}

double plucker_objective(const Eigen::MatrixXd& A, const PluckerSystem& ps, const std::vector<std::vector<double>>& w, std::size_t d) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(ps.subsets.size()));
    for (std::size_t s = 0; s < ps.subsets.size(); ++s) {
        auto c = complement(ps.subsets[s], d);
        Eigen::MatrixXd m(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.size()));
        for (std::size_t i = 0; i < w.size(); ++i)
            for (std::size_t k = 0; k < c.size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = w[i][c[k]];
        q(static_cast<Eigen::Index>(s)) = m.determinant();
    }
    double nq = q.squaredNorm();
    if (nq < 1e-300) return 1e300;
    return (A * q).squaredNorm() / nq;
}

Eigen::MatrixXd to_eigen(const RMatrix& m) {
    Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j).get_d();
    return e;
}

double confidence_for(unsigned checks) { return checks == 0 ? 0.0 : std::max(0.0, 1.0 - 3.0 / checks); }

std::vector<RVec> rational_rows(const std::vector<std::vector<double>>& rows, long max_den) {
    std::vector<RVec> out;
    for (const auto& r : rows) out.push_back(rationalize(r, max_den));
    return out;
}

// Random local search with shrinking steps; rows are re-orthonormalized after each move.
template <class F>
std::vector<std::vector<double>> local_minimize(std::vector<std::vector<double>> x, F f, unsigned iters, Rng& rng) {
    double best = f(x), step = 0.25;
    for (unsigned it = 0; it < iters && step > 1e-13; ++it) {
        auto y = x;
        for (auto& row : y)
            for (auto& v : row) v += step * normal(rng);
        if (!orthonormalize(y)) continue;
        double fy = f(y);
        if (fy < best) {
            best = fy;
            x = std::move(y);
            step *= 1.5;
        } else {
            step *= 0.7;
        }
    }
    return x;
}

}  // namespace

MultiPoly nondegeneracy_determinant(const QuadTuple& T, const std::vector<RVec>& w) {
    if (w.size() + T.n != T.d) throw Error("DIMENSION", "need exactly d - n vectors w");
    PolyMatrix G = gradient_polys(T);
    PolyMatrix M(T.d, T.d, T.d);
    for (std::size_t j = 0; j < T.n; ++j)
        for (std::size_t i = 0; i < T.d; ++i) M(j, i) = G(j, i);
    for (std::size_t r = 0; r < w.size(); ++r) {
        if (w[r].size() != T.d) throw Error("DIMENSION", "w vector length differs from d");
        for (std::size_t i = 0; i < T.d; ++i) M(T.n + r, i) = MultiPoly::constant(T.d, w[r][i]);
    }
    return poly_det(M);
}

HypothesisReport check_nondegeneracy(const QuadTuple& T, const HypothesisConfig& cfg) {
    if (T.n > T.d) throw Error("N_GT_D", "nondegeneracy needs n <= d");
    HypothesisReport rep;
    rep.check = "nondegeneracy";
    rep.seed = cfg.seed;
    std::size_t k = T.d - T.n;
    auto standard_w = [&] {
        std::vector<RVec> w;
        for (std::size_t r = 0; r < k; ++r) {
            RVec v(T.d);
            v[T.n + r] = 1;
            w.push_back(v);
        }
        return w;
    };
    for (const auto& m : T.forms)
        if (m == RMatrix(T.d, T.d)) {
            rep.verdict = Verdict::FAIL;
            rep.method = "zero-form";
            rep.witness_w = standard_w();
            return rep;
        }
    if (codim1_shortcut(T) == Codim1::APPLIES) {
        rep.verdict = Verdict::PASS;
        rep.method = "codim1";
        return rep;
    }
    PluckerSystem ps = plucker_system(T);
    rep.exact_checks = 1;
    if (rank(ps.A) == ps.subsets.size()) {
        rep.verdict = Verdict::PASS;
        rep.method = "exact-kernel";
        return rep;
    }
    if (k == 0) {
        rep.verdict = Verdict::FAIL;
        rep.method = "exact-determinant";
        return rep;
    }
    auto try_w = [&](const std::vector<RVec>& w) {
        RMatrix wm = RMatrix::from_rows(w);
        if (rank(wm) < k) return false;
        ++rep.exact_checks;
        if (!vanishes(ps, complementary_minors(ps, w, T.d))) return false;
        rep.verdict = Verdict::FAIL;
        rep.witness_w = w;
        return true;
    };
    for (const auto& C : subsets(T.d, k)) {
        std::vector<RVec> w;
        for (auto c : C) {
            RVec v(T.d);
            v[c] = 1;
            w.push_back(v);
        }
        if (try_w(w)) {
            rep.method = "coordinate-subspace";
            return rep;
        }
    }
    Rng rng(cfg.seed);
    auto shift = random_shift(rng, k * T.d);
    Eigen::MatrixXd A = to_eigen(ps.A);
    auto objective = [&](const std::vector<std::vector<double>>& w) { return plucker_objective(A, ps, w, T.d); };
    std::vector<std::pair<double, std::vector<std::vector<double>>>> best;
    for (unsigned s = 0; s < cfg.samples; ++s) {
        auto h = halton(s, k * T.d, shift);
        std::vector<std::vector<double>> w(k, std::vector<double>(T.d));
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t i = 0; i < T.d; ++i) w[r][i] = 2 * h[r * T.d + i] - 1;
        if (!orthonormalize(w)) continue;
        ++rep.samples;
        if (try_w(rational_rows(w, cfg.max_den))) {
            rep.method = "sampled";
            return rep;
        }
        best.emplace_back(objective(w), w);
        std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (best.size() > cfg.local_starts) best.pop_back();
    }
    for (auto& [f0, w0] : best) {
        auto w = local_minimize(w0, objective, cfg.local_iters, rng);
        if (try_w(rational_rows(w, cfg.max_den))) {
            rep.method = "local-minimization";
            return rep;
        }
    }
    rep.verdict = Verdict::LIKELY_PASS;
    rep.method = "sampled";
    rep.confidence = confidence_for(rep.exact_checks);
    return rep;
}

bool hyperplane_lambda_rank_ok(const QuadTuple& T, const Hyperplane& H) {
    if (T.d <= 2) return true;
    QuadTuple R = restrict_to_hyperplane(T, H);
    std::size_t m = R.d, target = T.d - 2;
    // Any single lambda with large enough rank is an exact witness.
    for (long trial = 0; trial < 3; ++trial) {
        RMatrix comb(m, m);
        for (std::size_t j = 0; j < T.n; ++j) comb = comb + R.forms[j] * Rational(static_cast<long>((j + 1) * (j + 1) + trial * (2 * j + 3)));
        if (rank(comb) >= target) return true;
    }
    PolyMatrix L(m, m, T.n);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
            MultiPoly e(T.n);
            for (std::size_t j = 0; j < T.n; ++j) {
                Multiindex idx(T.n, 0);
                idx[j] = 1;
                e.add_term(idx, R.forms[j](a, b));
            }
            L(a, b) = e;
        }
    for (const auto& minor : polymat_minors(L, target))
        if (!minor.is_zero()) return true;
    return false;
}

namespace {

std::vector<std::vector<double>> complement_basis(const std::vector<double>& h) {
    std::size_t d = h.size();
    std::vector<std::vector<double>> rows{h};
    for (std::size_t i = 0; i < d && rows.size() < d; ++i) {
        std::vector<double> e(d, 0.0);
        e[i] = 1;
        auto trial = rows;
        trial.push_back(e);
        if (orthonormalize(trial, 1e-8)) rows = trial;
    }
    rows.erase(rows.begin());
    return rows;
}

double hyperplane_objective(const QuadTuple& T, const std::vector<double>& h, const std::vector<std::vector<double>>& lambdas) {
    auto B = complement_basis(h);
    std::size_t m = B.size();
    double total = 0;
    for (const auto& lam : lambdas) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) {
                double s = 0;
                for (std::size_t j = 0; j < T.n; ++j)
                    for (std::size_t x = 0; x < T.d; ++x)
                        for (std::size_t y = 0; y < T.d; ++y) s += lam[j] * B[a][x] * T.forms[j](x, y).get_d() * B[b][y];
                M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
            }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        auto sv = svd.singularValues();
        double nrm = sv.norm();
        if (nrm < 1e-300) continue;
        double s = sv(static_cast<Eigen::Index>(T.d - 3)) / nrm;
        total += s * s;
    }
    return total;
}

}  // namespace

HypothesisReport check_hyperplane_rank(const QuadTuple& T, const HypothesisConfig& cfg) {
    HypothesisReport rep;
    rep.check = "hyperplane_rank";
    rep.seed = cfg.seed;
    if (T.d <= 2) {
        rep.verdict = Verdict::PASS;
        rep.method = "vacuous";
        return rep;
    }
    if (codim1_shortcut(T) == Codim1::APPLIES) {
        rep.verdict = Verdict::PASS;
        rep.method = "codim1";
        return rep;
    }
    auto try_h = [&](const RVec& normal) {
        if (std::all_of(normal.begin(), normal.end(), [](const Rational& x) { return x == 0; })) return false;
        Hyperplane H{normal, 0};
        ++rep.exact_checks;
        if (hyperplane_lambda_rank_ok(T, H)) return false;
        rep.verdict = Verdict::FAIL;
        rep.witness_h = H;
        return true;
    };
    for (std::size_t i = 0; i < T.d; ++i) {
        RVec e(T.d);
        e[i] = 1;
        if (try_h(e)) {
            rep.method = "coordinate-hyperplane";
            return rep;
        }
    }
    Rng rng(cfg.seed);
    auto shift = random_shift(rng, T.d);
    std::vector<std::vector<double>> lambdas;
    for (int r = 0; r < 3; ++r) {
        std::vector<double> lam(T.n);
        for (auto& v : lam) v = normal(rng);
        lambdas.push_back(lam);
    }
    auto objective = [&](const std::vector<std::vector<double>>& h) { return hyperplane_objective(T, h[0], lambdas); };
    std::vector<std::pair<double, std::vector<double>>> best;
    for (unsigned s = 0; s < cfg.samples; ++s) {
        auto x = halton(s, T.d, shift);
        std::vector<std::vector<double>> h{std::vector<double>(T.d)};
        for (std::size_t i = 0; i < T.d; ++i) h[0][i] = 2 * x[i] - 1;
        if (!orthonormalize(h)) continue;
        ++rep.samples;
        if (try_h(rationalize(h[0], cfg.max_den))) {
            rep.method = "sampled";
            return rep;
        }
        if (cfg.local_starts > 0) {
            best.emplace_back(objective(h), h[0]);
            std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            if (best.size() > cfg.local_starts) best.pop_back();
        }
    }
    for (auto& [f0, h0] : best) {
        auto h = local_minimize(std::vector<std::vector<double>>{h0}, objective, cfg.local_iters, rng);
        if (try_h(rationalize(h[0], cfg.max_den))) {
            rep.method = "local-minimization";
            return rep;
        }
    }
    rep.verdict = Verdict::LIKELY_PASS;
    rep.method = "sampled";
    rep.confidence = confidence_for(rep.exact_checks);
    return rep;
}

bool check_diagonal_criterion(const RVec& a, const RVec& b) {
    if (a.size() != b.size()) throw Error("DIMENSION", "diagonal lengths differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            if (a[i] * b[j] - a[j] * b[i] == 0) return false;
    return true;
}

Codim1 codim1_shortcut(const QuadTuple& T) {
    if (T.n == 1 && rank(T.forms[0]) == T.d) return Codim1::APPLIES;
    return Codim1::NOT_APPLICABLE;
}

Rational hyperplane_decoupling_exponent(long d, long n, const Rational& p) {
    if (d < 1 || n < 1) throw ValidationError("RANGE", "d and n must be positive");
    if (p < 2) throw Error("RANGE", "p must be at least 2");
    if (p > 2 + Q(4 * n, d)) throw Error("RANGE", "p exceeds 2 + 4n/d = " + to_string(2 + Q(4 * n, d)));
    if (n * (d - 2) > d) throw Error("RANGE", "n(d-2) = " + std::to_string(n * (d - 2)) + " exceeds d = " + std::to_string(d));
    return Rational(d) * (Q(1, 2) - 1 / p);
}

}  // namespace qdec
