#pragma once

#include "qdec/polyalg.hpp"

#include "json.hpp"

#include <cstdint>
#include <vector>

namespace qdec {

enum class LadderMode { LEMMA, COROLLARY };

// Dyadic scales K_1 <= ... <= K_{D+1} = K stored as base-2 exponents.
struct ScaleLadder {
    long D = 0;
    long A = 1;
    LadderMode mode = LadderMode::LEMMA;
    std::vector<int> exps;       // log2 K_j, j = 1..D+1
    std::vector<int> cube_exps;  // log2 of the inverse cube side of layer j = 1..D
    Rational c = 1;              // (A+1)^-D
    int comparability = 0;       // max_j |log2 K_{j+1} - (A+1) log2 K_j|

    double K(std::size_t j) const;  // 1-based
    double radius(std::size_t j) const;
};

// K must be a power of two. In lemma mode K_j = 2^round(log2 K * (A+1)^(j-D-1)) and layer j uses
// cubes of side 1/K_j^A; corollary mode clamps the layer scales into [K^c, sqrt K].
ScaleLadder scale_ladder(std::uint64_t K, long A, long D, LadderMode mode = LadderMode::LEMMA);

struct SublevelPiece {
    Multiindex alpha;
    MultiPoly poly;  // derivative of P of order |alpha|
};

struct SublevelCertificate {
    std::size_t D = 0;
    std::vector<SublevelPiece> pieces;  // pieces[j-1] belongs to scale K_j
    Rational c0 = 1;
    Rational c1 = 1;
};

// Greedy derivative chain for a polynomial with unit coefficient l1 norm.
SublevelCertificate sublevel_decompose(const MultiPoly& P, const ScaleLadder& ladder);
Rational hessian_constant(std::size_t nvars, std::size_t D);

struct InclusionReport {
    std::size_t samples = 0;
    std::size_t proposals = 0;
    std::size_t violations = 0;
    bool vacuous = false;
    std::vector<std::vector<double>> violating_points;
    std::uint64_t seed = 0;
};

InclusionReport verify_sublevel_inclusion(const MultiPoly& P, const SublevelCertificate& cert, const ScaleLadder& ladder,
                                          std::size_t samples, std::uint64_t seed);

// Nearest-zero search: damped Newton from x towards Z_P, giving up beyond max_dist.
// Returns true and the zero if one is found within max_dist.
bool find_zero_near(const MultiPoly& P, const std::vector<double>& x, double max_dist, std::vector<double>& zero);

struct CubeLayer {
    int level = 0;  // cube side 2^-level
    std::vector<std::vector<std::int64_t>> cubes;  // integer anchors, anchor = index * 2^-level
};

struct CoverOptions {
    int dilation = 4;
    int resolution = 4;
    LadderMode mode = LadderMode::LEMMA;
};

struct CubeCover {
    ScaleLadder ladder;
    SublevelCertificate chain;
    std::vector<CubeLayer> layers;

    bool covers(const std::vector<double>& x) const;
};

CubeCover variety_cube_cover(const MultiPoly& P, std::uint64_t K, long A, std::size_t d, const CoverOptions& opts = {});

// Points within 1/K of Z_P inside [0,1]^d, found by projecting uniform points onto Z_P.
std::vector<std::vector<double>> sample_zero_neighborhood(const MultiPoly& P, double K, std::size_t count, std::uint64_t seed);

nlohmann::json ladder_to_json(const ScaleLadder& L);
nlohmann::json certificate_to_json(const SublevelCertificate& c);
nlohmann::json report_to_json(const InclusionReport& r);
nlohmann::json cover_to_json(const CubeCover& c);

}  // namespace qdec
