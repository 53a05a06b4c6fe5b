#pragma once

#include "qdec/polyalg.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace qdec {

// n quadratic forms P_j(t) = t^T M_j t on R^d.
struct QuadTuple {
    std::size_t d = 0;
    std::size_t n = 0;
    std::vector<RMatrix> forms;

    static QuadTuple make(std::size_t d, std::size_t n, std::vector<RMatrix> forms);
    Rational eval(std::size_t j, const RVec& t) const;
    RVec eval_all(const RVec& t) const;
    std::vector<double> eval_all(const std::vector<double>& t) const;
    MultiPoly form_poly(std::size_t j) const;
};

// Dyadic cube anchor + 2^-level [0,1]^d.
struct Cap {
    RVec anchor;
    int level = 0;

    Rational side() const { return dyadic(level); }
    RVec center() const;
    std::vector<double> center_double() const;
    bool operator==(const Cap& o) const { return level == o.level && anchor == o.anchor; }
    bool operator<(const Cap& o) const;
    // Exact containment of closed cubes.
    bool contains(const Cap& inner) const;
    // Cube with the same center and `factor` times the side.
    bool dilate_contains(const Rational& factor, const Cap& inner, const Rational& inner_factor) const;
};

struct Reparam {
    RVec anchor;
    RMatrix grad;  // d x n
    RMatrix L;     // (d+n) x (d+n)
};

struct UncertaintyBox {
    RVec center;
    RMatrix generator;  // L^T; the box is center + generator([-C, C]^{d+n})
    Rational C;

    bool contains(const RVec& x) const;
    bool contains(const UncertaintyBox& inner) const;
};

// Linear hyperplane {t : normal . t = offset}. graph_var is the coordinate solved for
// in graph form t_k = sum_i coeffs[i] t'_i + offset / normal_k, t' the remaining coordinates.
struct Hyperplane {
    RVec normal;
    Rational offset = 0;

    static Hyperplane graph(const RVec& coeffs);  // t_d = sum coeffs[i] t_i
    std::size_t default_graph_var() const;
    std::vector<RVec> basis() const;  // basis of the linear part, as columns t = S t'
};

RMatrix gradient_matrix(const QuadTuple& T, const RVec& a);
std::vector<RVec> tangent_frame(const QuadTuple& T, const RVec& t);
Rational minimal_C(const QuadTuple& T);
Reparam reparam(const Cap& cap, const QuadTuple& T);
UncertaintyBox uncertainty_box(const Cap& cap, const QuadTuple& T, const Rational& C);
QuadTuple restrict_to_hyperplane(const QuadTuple& T, const Hyperplane& H);
std::vector<Cap> caps_partition(std::size_t d, int level);
std::vector<Cap> subcaps(const Cap& Q, int level);
// Level k with side 2^-k; throws for non-dyadic input.
int dyadic_level(const Rational& delta);

QuadTuple parabola(std::size_t d);
QuadTuple diagonal_tuple(const std::vector<RVec>& diagonals);
QuadTuple parse_preset(const std::string& spec);

nlohmann::json tuple_to_json(const QuadTuple& T);
QuadTuple tuple_from_json(const nlohmann::json& j);
nlohmann::json rvec_to_json(const RVec& v);
RVec rvec_from_json(const nlohmann::json& j);

}  // namespace qdec
