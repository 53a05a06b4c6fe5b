#include "qdec/capselect.hpp"

#include "qdec/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace qdec {

namespace {

using Index = std::vector<std::int64_t>;

void monomials_rec(std::size_t d, unsigned remaining, Multiindex& cur, std::size_t pos, std::vector<Multiindex>& out) {
    if (pos == d) {
        out.push_back(cur);
        return;
    }
    for (unsigned e = 0; e <= remaining; ++e) {
        cur[pos] = e;
        monomials_rec(d, remaining - e, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

std::vector<Multiindex> monomials_upto(std::size_t d, unsigned deg) {
    std::vector<Multiindex> out;
    Multiindex cur(d, 0);
    monomials_rec(d, deg, cur, 0, out);
    std::sort(out.begin(), out.end(), GradedLex());
    return out;
}

double lipschitz_unit_cube(const MultiPoly& Z) {
    double L = 0.0;
    for (const auto& [a, c] : Z.terms()) L += std::fabs(to_double(c)) * total_degree(a);
    return L;
}

Index cap_index(const Cap& cap) {
    Index idx;
    Rational scale = dyadic(-cap.level);
    for (const auto& a : cap.anchor) {
        Rational v = a * scale;
        idx.push_back(v.get_num().get_si());
    }
    return idx;
}

struct Candidate {
    MultiPoly Z;
    double residual = 0.0;
    std::vector<std::size_t> captured;
};

}  // namespace

CapStock initial_stock(const std::vector<Cap>& caps, const std::vector<double>& norms, std::uint64_t K, std::size_t d) {
    if (caps.size() != norms.size()) throw ValidationError("SHAPE", "one norm per cap is required");
    CapStock stock;
    if (caps.empty()) return stock;
    for (double v : norms)
        if (!std::isfinite(v) || v < 0) throw ValidationError("RANGE", "norms must be finite and nonnegative");
    double mx = *std::max_element(norms.begin(), norms.end());
    double thr = mx * std::pow(static_cast<double>(K), -static_cast<double>(d));
    for (std::size_t i = 0; i < caps.size(); ++i)
        if (norms[i] >= thr && norms[i] > 0) {
            stock.caps.push_back(caps[i]);
            stock.norms.push_back(norms[i]);
        }
    return stock;
}

bool captures(const MultiPoly& Z, const Cap& cap) {
    double v = std::fabs(poly_eval(Z, cap.center_double()));
    return v <= lipschitz_unit_cube(Z) * 2 * to_double(cap.side());
}

std::optional<ConcentrationCertificate> find_concentrating_variety(const std::vector<Cap>& caps, std::size_t d,
                                                                  const Rational& theta, const VarietyConfig& cfg) {
    if (theta <= 0 || theta >= 1) throw ValidationError("RANGE", "theta must lie in (0,1)");
    if (caps.empty() || cfg.ransac == 0) return std::nullopt;
    std::size_t N = caps.size();
    double th = to_double(theta);
    auto need = static_cast<std::size_t>(std::ceil(th * static_cast<double>(N)));
    std::vector<std::vector<double>> centers;
    for (const auto& c : caps) centers.push_back(c.center_double());

    for (unsigned deg = 1; deg <= d; ++deg) {
        auto mons = monomials_upto(d, deg);
        std::size_t m = mons.size();
        Eigen::MatrixXd V(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < m; ++k) {
                double v = 1.0;
                for (std::size_t x = 0; x < d; ++x)
                    for (unsigned e = 0; e < mons[k][x]; ++e) v *= centers[i][x];
                V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
            }
        std::size_t attempts = N <= m - 1 ? 1 : cfg.ransac;
        std::vector<std::optional<Candidate>> results(attempts);
        parallel_for(attempts, [&](std::size_t a) {
            Rng rng(cfg.seed + 1000003 * deg + a);
            std::vector<std::size_t> order(N);
            std::iota(order.begin(), order.end(), 0);
            std::size_t size = N;
            if (N > m - 1) {
                size = a % 2 == 0 ? m - 1 : std::max(m - 1, need);
                size = std::min(size, N);
                for (std::size_t i = 0; i < size; ++i)
                    std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, static_cast<long>(i), static_cast<long>(N - 1)))]);
            }
            Eigen::MatrixXd S(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(m));
            for (std::size_t i = 0; i < size; ++i) S.row(static_cast<Eigen::Index>(i)) = V.row(static_cast<Eigen::Index>(order[i]));
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeFullV);
            Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(m - 1));
            const auto& sv = svd.singularValues();
            double smax = sv.size() > 0 ? sv(0) : 0.0;
            double smin = size >= m ? sv(static_cast<Eigen::Index>(m - 1)) : 0.0;
            double scale = v.cwiseAbs().maxCoeff();
            if (scale == 0.0) return;
            MultiPoly Z(d);
            for (std::size_t k = 0; k < m; ++k) Z.add_term(mons[k], rationalize(v(static_cast<Eigen::Index>(k)) / scale, cfg.max_den));
            if (Z.is_zero() || Z.degree() == 0) return;
            Z = Z * (1 / poly_norm1(Z));
            Candidate cand{Z, smax > 0 ? smin / smax : 0.0, {}};
            for (std::size_t i = 0; i < N; ++i)
                if (captures(Z, caps[i])) cand.captured.push_back(i);
            results[a] = std::move(cand);
        });
        const Candidate* best = nullptr;
        for (const auto& r : results)
            if (r && r->captured.size() >= need && (!best || r->captured.size() > best->captured.size())) best = &*r;
        if (best) {
            ConcentrationCertificate cert;
            cert.Z = best->Z;
            cert.captured = best->captured;
            cert.fraction = static_cast<double>(best->captured.size()) / static_cast<double>(N);
            cert.residual = best->residual;
            cert.exact = best->residual < cfg.exact_tol;
            return cert;
        }
    }
    return std::nullopt;
}

bool cube_contains_cap(int level, const std::vector<std::int64_t>& idx, const Cap& cap) {
    if (level > cap.level) return false;
    auto ci = cap_index(cap);
    for (std::size_t i = 0; i < ci.size(); ++i)
        if ((ci[i] >> (cap.level - level)) != idx[i]) return false;
    return true;
}

SelectionOutcome bg_select(const QuadTuple& T, const std::vector<double>& norms, std::uint64_t K, const SelectConfig& cfg) {
    if (K < 2 || (K & (K - 1)) != 0) throw ValidationError("NOT_DYADIC", "K must be a power of two >= 2");
    int level = 0;
    while ((std::uint64_t{1} << level) < K) ++level;
    SelectionOutcome out;
    out.theta = cfg.theta ? *cfg.theta : compute_theta(static_cast<long>(T.d), static_cast<long>(T.n));
    if (out.theta <= 0 || out.theta >= 1) throw ValidationError("RANGE", "theta must lie in (0,1)");
    if (norms.empty()) return out;
    auto all = caps_partition(T.d, level);
    if (norms.size() != all.size()) throw ValidationError("SHAPE", "norms must list one value per cap of Part_{1/K}");
    auto stock = initial_stock(all, norms, K, T.d);
    {
        std::set<Cap> kept(stock.caps.begin(), stock.caps.end());
        for (const auto& c : all)
            if (!kept.count(c)) out.below_threshold.push_back(c);
    }
    Rational inv = 1 / out.theta;
    mpz_class ceil_inv = (inv.get_num() + inv.get_den() - 1) / inv.get_den();
    std::size_t limit = static_cast<std::size_t>(level) * ceil_inv.get_ui();

    std::vector<std::pair<int, std::set<Index>>> earlier;
    while (!stock.caps.empty()) {
        TransversalityConfig tc = cfg.transversality;
        tc.seed = cfg.transversality.seed + out.rounds;
        auto rep = nu_transverse(T, stock.caps, tc);
        if (rep.transverse) {
            out.transverse = stock.caps;
            out.report = rep;
            break;
        }
        if (out.rounds >= limit) throw Error("ROUND_LIMIT", "cap selection exceeded " + std::to_string(limit) + " rounds");
        VarietyConfig vc = cfg.variety;
        vc.seed = cfg.variety.seed + out.rounds;
        auto cert = find_concentrating_variety(stock.caps, T.d, out.theta, vc);
        if (!cert)
            throw Error("NO_VARIETY_FOUND", "caps are not transverse (" + rep.reason +
                                                ") and no concentrating variety was found");
        auto cover = variety_cube_cover(cert->Z, K, cfg.A, T.d, cfg.cover);
        for (std::size_t j = 0; j < cover.layers.size(); ++j) {
            SelectionLayer sl{out.rounds, j + 1, {cover.layers[j].level, {}}};
            for (const auto& idx : cover.layers[j].cubes) {
                bool inside = false;
                for (const auto& [lv, cubes] : earlier) {
                    if (lv > sl.layer.level) continue;
                    Index anc(idx.size());
                    for (std::size_t i = 0; i < idx.size(); ++i) anc[i] = idx[i] >> (sl.layer.level - lv);
                    if (cubes.count(anc)) {
                        inside = true;
                        break;
                    }
                }
                if (!inside) sl.layer.cubes.push_back(idx);
            }
            earlier.emplace_back(sl.layer.level, std::set<Index>(sl.layer.cubes.begin(), sl.layer.cubes.end()));
            out.layers.push_back(std::move(sl));
        }
        std::set<std::size_t> captured(cert->captured.begin(), cert->captured.end());
        CapStock next;
        next.round = out.rounds + 1;
        for (std::size_t i = 0; i < stock.caps.size(); ++i) {
            bool gone = captured.count(i) > 0;
            auto ci = cap_index(stock.caps[i]);
            for (std::size_t e = 0; e < earlier.size() && !gone; ++e) {
                int lv = earlier[e].first;
                if (lv > level) continue;
                Index anc(ci.size());
                for (std::size_t k = 0; k < ci.size(); ++k) anc[k] = ci[k] >> (level - lv);
                gone = earlier[e].second.count(anc) > 0;
            }
            if (gone) {
                out.removed.push_back(stock.caps[i]);
            } else {
                next.caps.push_back(stock.caps[i]);
                next.norms.push_back(stock.norms[i]);
            }
        }
        out.certificates.push_back(std::move(*cert));
        stock = std::move(next);
        ++out.rounds;
    }
    return out;
}

nlohmann::json cap_to_json(const Cap& c) { return {{"anchor", rvec_to_json(c.anchor)}, {"level", c.level}}; }

nlohmann::json certificate_to_json(const ConcentrationCertificate& c) {
    return {{"Z", poly_to_json(c.Z)},
            {"degree", c.Z.degree()},
            {"fraction", c.fraction},
            {"residual", c.residual},
            {"exact_fit", c.exact},
            {"captured", c.captured.size()}};
}

nlohmann::json outcome_to_json(const SelectionOutcome& o) {
    nlohmann::json j;
    j["theta"] = to_string(o.theta);
    j["rounds"] = o.rounds;
    j["transverse"] = nlohmann::json::array();
    for (const auto& c : o.transverse) j["transverse"].push_back(cap_to_json(c));
    j["transversality"] = o.report ? report_to_json(*o.report) : nlohmann::json(nullptr);
    j["layers"] = nlohmann::json::array();
    for (const auto& l : o.layers)
        j["layers"].push_back({{"round", l.round}, {"j", l.j}, {"log2_inverse_side", l.layer.level}, {"cubes", l.layer.cubes}});
    j["certificates"] = nlohmann::json::array();
    for (const auto& c : o.certificates) j["certificates"].push_back(certificate_to_json(c));
    j["removed"] = o.removed.size();
    j["below_threshold"] = o.below_threshold.size();
    return j;
}

}  // namespace qdec
