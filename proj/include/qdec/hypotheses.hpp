#pragma once

#include "qdec/quadforms.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace qdec {

enum class Verdict { PASS, FAIL, LIKELY_PASS };
std::string to_string(Verdict v);

struct HypothesisConfig {
    unsigned samples = 2048;
    std::uint64_t seed = 0;
    unsigned local_starts = 4;
    unsigned local_iters = 150;
    long max_den = 1000000;
};

struct HypothesisReport {
    std::string check;
    Verdict verdict = Verdict::LIKELY_PASS;
    std::string method;
    std::vector<RVec> witness_w;          // nondegeneracy FAIL
    std::optional<Hyperplane> witness_h;  // hyperplane-rank FAIL
    unsigned samples = 0;
    unsigned exact_checks = 0;
    double confidence = 0.0;
    std::uint64_t seed = 0;
};

nlohmann::json report_to_json(const HypothesisReport& r);

// det[grad P_1(t); ...; grad P_n(t); w_1; ...; w_{d-n}] as a polynomial in t.
MultiPoly nondegeneracy_determinant(const QuadTuple& T, const std::vector<RVec>& w);
HypothesisReport check_nondegeneracy(const QuadTuple& T, const HypothesisConfig& cfg);

// True iff some lambda gives rank((sum lambda_j P_j)|_H) >= d - 2, decided exactly.
bool hyperplane_lambda_rank_ok(const QuadTuple& T, const Hyperplane& H);
HypothesisReport check_hyperplane_rank(const QuadTuple& T, const HypothesisConfig& cfg);

bool check_diagonal_criterion(const RVec& a, const RVec& b);

enum class Codim1 { APPLIES, NOT_APPLICABLE };
Codim1 codim1_shortcut(const QuadTuple& T);

Rational hyperplane_decoupling_exponent(long d, long n, const Rational& p);

}  // namespace qdec
