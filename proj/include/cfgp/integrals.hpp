#pragma once

#include "cfgp/trend.hpp"
#include "cfgp/types.hpp"

namespace cfgp {

/// Lower incomplete-gamma style polynomial-exponential moment
///   E_k(z) = int_0^z w^k e^{-w} dw,  z >= 0, 0 <= k <= 12.
/// Series for small z, stable forward recurrence otherwise.
double ek_integral(int k, double z);

/// One-dimensional correlation moment
///   I^(q)(x) = int_0^1 u^{q-1} R_phi(u - x) du,  q >= 1, x in [0, 1].
/// Closed form: error functions for the Gaussian family, exponential
/// moments E_k for the Matern families.  Supports q up to 5.
double corr_moment(CorrFamily family, double phi, int q, double x);

/// One-dimensional product integral
///   w(y, z) = int_0^1 R_phi(u - y) R_phi(u - z) du,  y, z in [0, 1].
double corr_product_integral(CorrFamily family, double phi, double y, double z);

/// W(i, j) = sigma^4 prod_r w(X(i,r), X(j,r)); the integrated outer product
/// of the cross-covariance vectors to the zero-fidelity surface.
Mat w_matrix(const Mat& X, const CorrelationSpec& corr1, double sigma2);

/// Column of W against a new location x*.
Vec w_vector(const Mat& X, const Vec& xstar, const CorrelationSpec& corr1, double sigma2);

/// Diagonal entry w(x*, x*) with the same sigma^4 prefactor.
double w_scalar(const Vec& xstar, const CorrelationSpec& corr1, double sigma2);

/// H(i, a) = sigma^2 int f_a(x) R_phi1(x - x_i) dx over the unit cube, where
/// f_a is trend column a evaluated on the zero-fidelity surface (so a
/// fidelity trend column integrates to zero).  n x p.
Mat h_matrix(const Mat& X, const TrendBasis& basis, const CorrelationSpec& corr1,
             double sigma2);

/// Row of H for a new location x*.
Vec h_vector(const Vec& xstar, const TrendBasis& basis, const CorrelationSpec& corr1,
             double sigma2);

/// G(a, b) = int f_a(x) f_b(x) dx over the unit cube on the zero-fidelity
/// surface.  Exact: accumulated in integer rationals, converted at the end.
Mat g_matrix(const TrendBasis& basis, int d);

}  // namespace cfgp
