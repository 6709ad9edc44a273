#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace cfgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when a linear-algebra step fails beyond repair (e.g. a covariance
/// matrix that cannot be factorized even after jitter escalation).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for malformed run configurations (unknown keys, bad values).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an operation is invoked on an object in the wrong state,
/// e.g. prediction from an unfitted model.
class state_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Stationary separable correlation families for the input space.
enum class CorrFamily { Gaussian, Matern05, Matern15, Matern25 };

const char* to_string(CorrFamily family);
CorrFamily corr_family_from_string(const std::string& name);

/// Separable input-space correlation R(h) = prod_r rho(phi_r, h_r).
/// phi are inverse lengthscales, one per input dimension, strictly positive.
struct CorrelationSpec {
  CorrFamily family = CorrFamily::Gaussian;
  Vec phi;

  int dim() const { return static_cast<int>(phi.size()); }
  void validate() const;
};

/// Non-stationary fidelity kernel
///   K_gamma(t1,t2) = (S1^gamma + S2^gamma - S3^gamma) / 2
/// with u_{k,j} = a_j t_{k,j}^{l_j},
///   S1 = sum_j u_{1,j}^{1/gamma},  S2 = sum_j u_{2,j}^{1/gamma},
///   S3 = sum_j (u_{1,j}^{1/(2 gamma)} - u_{2,j}^{1/(2 gamma)})^2.
/// gamma in (0,1) controls short-range roughness; gamma = 1/2 with m = 1 and
/// a = 1 reduces to the Brownian-motion kernel min(t1^l, t2^l).  The
/// exponents l are fixed configuration, not estimated (default 4).
struct FidelityKernelSpec {
  double gamma = 0.5;
  Vec scale_a;
  Vec exponents_l;

  int dim() const { return static_cast<int>(scale_a.size()); }
  void validate() const;
};

/// Combined covariance over (x, t) pairs:
///   K((x1,t1),(x2,t2)) = sigma2 * (R_phi1(x1-x2) + R_phi2(x1-x2) * K_gamma(t1,t2)).
/// The t = 0 slice is the exact-solution process; K_gamma(t,0) = 0 makes the
/// cross covariance against that slice purely R_phi1.
struct CombinedCovSpec {
  double sigma2 = 1.0;
  CorrelationSpec corr_phi1;
  CorrelationSpec corr_phi2;
  FidelityKernelSpec fidelity;

  int input_dim() const { return corr_phi1.dim(); }
  int fidelity_dim() const { return fidelity.dim(); }
  void validate() const;
};

/// Training data: n rows of (x in [0,1]^d, t with positive components, y).
/// The model is noiseless, so exact duplicate (x,t) rows are rejected.
struct Dataset {
  Mat X;  // n x d, inside the unit cube
  Mat T;  // n x m, strictly positive components
  Vec y;  // n

  int n() const { return static_cast<int>(y.size()); }
  int d() const { return static_cast<int>(X.cols()); }
  int m() const { return static_cast<int>(T.cols()); }

  void validate() const;
  Dataset with_row_appended(const Vec& x, const Vec& t, double ynew) const;
};

enum class TrendKind { Constant, LegendreQuadraticWithInteractions };

const char* to_string(TrendKind kind);
TrendKind trend_kind_from_string(const std::string& name);

/// Mean-trend basis f(x,t).  Constant is [1].  The Legendre basis holds, per
/// input dimension, the shifted degree-1 and degree-2 Legendre polynomials
/// plus all pairwise first-order interactions.  include_fidelity_trend adds
/// one column t^l = prod_j t_j^{l_j}, which vanishes on the t = 0 slice.
struct TrendBasis {
  TrendKind kind = TrendKind::Constant;
  bool include_fidelity_trend = false;

  int column_count(int d) const;
};

/// Kernel hyperparameters plus the profiled trend coefficients and process
/// variance.  beta and sigma2 are populated by fitting; spec.sigma2 mirrors
/// sigma2 once populated.
struct HyperParams {
  CombinedCovSpec spec;
  Vec beta;
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace cfgp
