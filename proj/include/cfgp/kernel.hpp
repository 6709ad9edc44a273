#pragma once

#include "cfgp/types.hpp"

namespace cfgp {

/// Separable stationary correlation R(h) = prod_r rho_r(h_r), with
///   Gaussian : rho = exp(-phi^2 h^2)
///   Matern05 : rho = exp(-phi |h|)
///   Matern15 : rho = (1 + sqrt(3) phi |h|) exp(-sqrt(3) phi |h|)
///   Matern25 : rho = (1 + sqrt(5) phi |h| + (5/3) phi^2 h^2) exp(-sqrt(5) phi |h|)
/// Value lies in (0,1]; equals 1 iff h = 0; symmetric under h -> -h.
double corr_eval(const Vec& h, const CorrelationSpec& spec);

/// d R / d phi_i.  At h_i = 0 the Matern families have an absolute-value
/// kink; the derivative there is defined as 0 (the symmetric subgradient),
/// which is also what the closed forms below evaluate to.
double corr_grad_phi(const Vec& h, const CorrelationSpec& spec, int i);

/// One-dimensional factor rho(phi, h) of the separable product, and its
/// phi-derivative.  Exposed for the integral tables, which work per dimension.
double corr_eval_1d(CorrFamily family, double phi, double h);
double corr_grad_phi_1d(CorrFamily family, double phi, double h);

/// Fidelity kernel K_gamma(t1, t2); see FidelityKernelSpec for the formula.
/// Nonnegative; K_gamma(t, 0) = 0 for every t; K_gamma(t,t) equals the
/// (1/gamma)-norm of (a_j t_j^{l_j})_j.  Evaluation scales each p-norm sum by
/// its largest term so that exponents 1/gamma up to 100 neither overflow nor
/// lose the leading term to underflow.
double fidelity_cov(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec);

/// dK_gamma/dgamma.  Terms of the form u^{1/gamma} ln(u) are taken as 0 when
/// u = 0 (their analytic limit).
double fidelity_cov_grad_gamma(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec);

/// dK_gamma/da_j, derived by the chain rule on u_{k,j} = a_j t_{k,j}^{l_j}:
///   (1/(2 a_j)) [ S1^{gamma-1} u_{1,j}^{1/gamma} + S2^{gamma-1} u_{2,j}^{1/gamma}
///                 - S3^{gamma-1} (u_{1,j}^{1/(2gamma)} - u_{2,j}^{1/(2gamma)})^2 ],
/// with a term dropped when its sum S vanishes.
double fidelity_cov_grad_a(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec, int j);

/// Combined covariance sigma2 * (R_phi1(x1-x2) + R_phi2(x1-x2) K_gamma(t1,t2)).
double combined_cov(const Vec& x1, const Vec& t1, const Vec& x2, const Vec& t2,
                    const CombinedCovSpec& spec);

/// Kernel hyperparameters theta = (phi1, phi2, a, gamma) in their natural
/// (constrained) coordinates, in that fixed order.  This is the parameter
/// vector the likelihood gradient and the Fisher information run over.
struct KernelParamIndex {
  int d = 0;
  int m = 0;

  int count() const { return 2 * d + m + 1; }
  bool is_phi1(int k) const { return k < d; }
  bool is_phi2(int k) const { return k >= d && k < 2 * d; }
  bool is_a(int k) const { return k >= 2 * d && k < 2 * d + m; }
  bool is_gamma(int k) const { return k == 2 * d + m; }
  int phi1_dim(int k) const { return k; }
  int phi2_dim(int k) const { return k - d; }
  int a_dim(int k) const { return k - 2 * d; }
};

/// Unit-variance covariance matrix K0 over the rows of (X, T):
///   K0_ij = R_phi1(x_i - x_j) + R_phi2(x_i - x_j) K_gamma(t_i, t_j).
/// Also returns the two correlation matrices and the fidelity Gram matrix so
/// that derivative matrices can be assembled without re-evaluating kernels.
struct CovParts {
  Mat K0;      // R1 + R2 .* Kt
  Mat R1;
  Mat R2;
  Mat Kt;      // fidelity kernel Gram matrix
};

CovParts combined_cov_matrix(const Mat& X, const Mat& T, const CombinedCovSpec& spec);

/// dK0/dtheta_k as a dense symmetric matrix, reusing the parts cached by
/// combined_cov_matrix.  theta indexing per KernelParamIndex.
Mat combined_cov_matrix_grad(const Mat& X, const Mat& T, const CombinedCovSpec& spec,
                             const CovParts& parts, int k);

/// Unit-variance cross-covariance vector between one point and the dataset
/// rows: k0_i = R_phi1(x - x_i) + R_phi2(x - x_i) K_gamma(t, t_i).
Vec combined_cov_vector(const Mat& X, const Mat& T, const Vec& x, const Vec& t,
                        const CombinedCovSpec& spec);

}  // namespace cfgp
