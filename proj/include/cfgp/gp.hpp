#pragma once

#include "cfgp/kernel.hpp"
#include "cfgp/trend.hpp"
#include "cfgp/types.hpp"

namespace cfgp {

/// Cholesky of a symmetric PSD matrix with escalating diagonal jitter.
/// Adds eta * mean(diag) * I with eta stepping 1e-10, 1e-9, ..., 1e-6 and
/// keeps the first eta that factorizes.  Throws numerical_error with
/// diagnostics if even the largest jitter fails.  The model is noiseless, so
/// jitter exists purely to absorb roundoff in nearly singular Gram matrices.
struct JitteredChol {
  Eigen::LLT<Mat> llt;
  double eta = 0.0;         // relative jitter actually used
  double jitter_abs = 0.0;  // eta * mean(diag), the value added to the diagonal
};

JitteredChol cholesky_with_jitter(const Mat& A);

/// Covariance and trend matrices for a dataset under given kernel settings:
/// K0 is unit variance (sigma2 factored out) with the jitter already applied,
/// F is the n x p trend matrix.
struct AssembledMatrices {
  Mat K0;      // jittered
  Mat F;
  CovParts parts;  // unjittered kernel pieces (K0, R1, R2, Kt)
  double jitter_eta = 0.0;
  double jitter_abs = 0.0;
};

AssembledMatrices assemble(const Dataset& data, const TrendBasis& basis,
                           const CombinedCovSpec& spec);

/// Immutable fitted model: dataset, basis, hyperparameters, and the cached
/// factorizations needed for O(n^2) posterior evaluation.  Construction
/// profiles beta (GLS) and, unless profile_sigma2 is false, sigma2 as well.
class FittedModel {
 public:
  FittedModel(Dataset data, TrendBasis basis, CombinedCovSpec spec, bool profile_sigma2 = true);

  const Dataset& data() const { return data_; }
  const TrendBasis& basis() const { return basis_; }
  const HyperParams& params() const { return hp_; }
  double sigma2() const { return hp_.sigma2; }
  const Vec& beta() const { return hp_.beta; }
  const Mat& trend() const { return F_; }
  const Mat& k0() const { return K0_; }                    // jittered, unit variance
  const Eigen::LLT<Mat>& k0_factor() const { return llt_; }
  const Eigen::LLT<Mat>& normal_factor() const { return plt_; }  // of P0 = F' K0^-1 F
  double jitter_eta() const { return jitter_eta_; }
  double jitter_abs() const { return jitter_abs_; }
  int n() const { return data_.n(); }
  int p() const { return static_cast<int>(F_.cols()); }

  /// Universal-kriging posterior at (x, t); t = 0 is the exact-solution
  /// slice and the primary prediction target.  Variance includes the trend
  /// uncertainty term and is clamped at zero from below.
  void posterior(const Vec& x, const Vec& t, double& mean, double& variance) const;

  /// Posterior means/variances over rows of (Xq, Tq).
  void posterior_many(const Mat& Xq, const Mat& Tq, Vec& mean, Vec& variance) const;

 private:
  Dataset data_;
  TrendBasis basis_;
  HyperParams hp_;
  Mat K0_;
  Mat F_;
  Eigen::LLT<Mat> llt_;   // K0 (jittered)
  Eigen::LLT<Mat> plt_;   // P0 = F' K0^-1 F
  Vec resid_alpha_;       // K0^{-1} (y - F beta)
  double jitter_eta_ = 0.0;
  double jitter_abs_ = 0.0;
};

}  // namespace cfgp
