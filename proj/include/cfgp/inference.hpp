#pragma once

#include "cfgp/gp.hpp"
#include "cfgp/lbfgs.hpp"

#include <optional>
#include <vector>

namespace cfgp {

/// Bijection between the constrained kernel hyperparameters and the
/// unconstrained optimizer coordinates: log phi1 (d), log phi2 (d),
/// log a (m), then a scaled logit of gamma onto (gamma_lo, gamma_hi).
/// Box bounds in transformed space keep phi^2 and a within [1e-4, 1e4] and
/// the gamma logit within [-12, 12]; fixing gamma collapses its interval.
struct ParamTransform {
  int d = 1;
  int m = 1;
  CorrFamily family1 = CorrFamily::Gaussian;
  CorrFamily family2 = CorrFamily::Gaussian;
  Vec exponents_l;                       // fixed configuration, not estimated
  double gamma_lo = 0.01;
  double gamma_hi = 0.99;
  double log_phi_lo = std::log(1e-2);    // phi^2 >= 1e-4
  double log_phi_hi = std::log(1e2);     // phi^2 <= 1e4
  double log_a_lo = std::log(1e-4);
  double log_a_hi = std::log(1e4);
  double logit_cap = 12.0;
  std::optional<double> fix_gamma;

  int dim() const { return 2 * d + m + 1; }
  Vec lower() const;
  Vec upper() const;

  Vec to_unconstrained(const CombinedCovSpec& spec) const;
  /// sigma2 of the returned spec is 1; it is profiled separately.
  CombinedCovSpec to_spec(const Vec& s) const;
  /// Chain rule from the natural-parameter gradient (KernelParamIndex order)
  /// to the transformed coordinates at the point s.
  Vec pullback_gradient(const Vec& natural_grad, const Vec& s) const;

  double gamma_from_logit(double sg) const;
  double logit_from_gamma(double gamma) const;
};

/// Concentrated (restricted) log-likelihood machinery for one dataset/basis.
/// The trend matrix and the OLS residual Z = (I - F (F'F)^-1 F') y are
/// theta-independent and cached at construction.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(Dataset data, TrendBasis basis);

  /// l(theta) = -((n-p)/2) log Q - (1/2) log|K0| - (1/2) log|P0| with
  /// Q = Z' (K0^-1 - K0^-1 F P0^-1 F' K0^-1) Z; constants omitted.  Returns
  /// -inf when the quadratic form degenerates (y in the trend column space).
  double value(const CombinedCovSpec& spec) const;

  /// Value plus the analytic gradient in natural parameters
  /// (KernelParamIndex order: phi1, phi2, a, gamma).
  double value_and_gradient(const CombinedCovSpec& spec, Vec& grad) const;

  /// GLS estimates at fixed kernel parameters:
  /// beta = (F'K0^-1F)^-1 F'K0^-1 y,  sigma2 = r'K0^-1 r / (n-p).
  void beta_sigma2(const CombinedCovSpec& spec, Vec& beta, double& sigma2) const;

  const Dataset& data() const { return data_; }
  const TrendBasis& basis() const { return basis_; }
  int n() const { return data_.n(); }
  int p() const { return static_cast<int>(F_.cols()); }

 private:
  Dataset data_;
  TrendBasis basis_;
  // F and Z depend on the (fixed, not estimated) fidelity exponents when the
  // basis carries a fidelity column; cache them keyed by those exponents.
  mutable Mat F_;
  mutable Vec Z_;
  mutable Vec cached_exponents_;

  void refresh_trend(const Vec& exponents_l) const;
  struct Factored;
  bool factor(const CombinedCovSpec& spec, Factored& out) const;
};

double profile_loglik(const Dataset& data, const TrendBasis& basis, const CombinedCovSpec& spec);
Vec loglik_grad(const Dataset& data, const TrendBasis& basis, const CombinedCovSpec& spec);
void estimate_beta_sigma(const Dataset& data, const TrendBasis& basis,
                         const CombinedCovSpec& spec, Vec& beta, double& sigma2);

struct FitConfig {
  int n_starts = 20;
  int max_iters = 200;
  double grad_tol = 1e-6;
  std::uint64_t seed = 1;
  CorrFamily family1 = CorrFamily::Gaussian;
  CorrFamily family2 = CorrFamily::Gaussian;
  Vec exponents_l;  // empty -> all 4
  std::optional<double> fix_gamma;
  double gamma_lo = 0.01;
  double gamma_hi = 0.99;
  /// Specs evaluated as additional start points ahead of the
  /// low-discrepancy ones (used for warm starts during refits).
  std::vector<CombinedCovSpec> extra_starts;
};

struct StartRecord {
  Vec start;        // transformed coordinates
  Vec end;
  double value = -std::numeric_limits<double>::infinity();
  int iters = 0;
  bool converged = false;
};

struct FitReport {
  HyperParams best;              // kernel params + profiled beta, sigma2
  double loglik = -std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  int best_index = -1;
  std::vector<StartRecord> starts;
  FitConfig config;

  std::string to_json() const;
};

/// Multi-start bounded quasi-Newton maximization of the profile likelihood.
/// Start points come from a low-discrepancy sequence over the transformed
/// box; ties between starts break toward the lower index, so the result is
/// deterministic under a fixed seed.  Throws numerical_error if every start
/// fails to produce a finite objective.
FitReport fit_mle(const Dataset& data, const TrendBasis& basis, const FitConfig& config);

/// Convenience: fit, then build the cached FittedModel at the optimum.
FittedModel fit_mle_model(const Dataset& data, const TrendBasis& basis, const FitConfig& config,
                          FitReport* report = nullptr);

/// Fisher information entry (1/2) tr(K^-1 dK/dtheta_i K^-1 dK/dtheta_j) for
/// the full covariance K = sigma2 K0 under a constant-mean convention.
/// Parameter index 0 is sigma2; indices 1.. follow KernelParamIndex shifted
/// by one (phi1, phi2, a, gamma).
double fisher_information(const Mat& X, const Mat& T, const CombinedCovSpec& spec, int i, int j);

/// Convenience for design diagnostics: the gamma diagonal entry.
double fisher_gamma(const Mat& X, const Mat& T, const CombinedCovSpec& spec);

}  // namespace cfgp
