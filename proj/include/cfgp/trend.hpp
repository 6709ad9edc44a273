#pragma once

#include "cfgp/types.hpp"

#include <vector>

namespace cfgp {

/// One basis column written as a sparse multivariate polynomial in x,
/// sum_k coef_k * prod_r x_r^{exp_k(r)}.  Integer coefficients throughout,
/// which keeps the pairwise unit-cube integrals exact rationals.
struct MonomialPoly {
  struct Term {
    double coef;
    std::vector<int> exp;  // length d
  };
  std::vector<Term> terms;
};

/// Basis columns of f(x, 0) as polynomials in x (the fidelity-trend column,
/// if present, vanishes at t = 0 and appears as an empty polynomial).
/// Column order: 1; per-dimension degree-1 Legendre 2x-1; per-dimension
/// degree-2 Legendre 6x^2-6x+1; interactions (2x_i-1)(2x_j-1) for i < j;
/// optional fidelity trend last.
std::vector<MonomialPoly> basis_zero_fidelity_polys(const TrendBasis& basis, int d);

/// f(x, t) for a single point.  x must lie in the unit cube.  exponents_l
/// feed the optional fidelity-trend column t^l = prod_j t_j^{l_j}.
Vec trend_eval(const Vec& x, const Vec& t, const TrendBasis& basis, const Vec& exponents_l);

/// Row-wise trend matrix F (n x p) over a dataset.
Mat trend_matrix(const Mat& X, const Mat& T, const TrendBasis& basis, const Vec& exponents_l);

}  // namespace cfgp
