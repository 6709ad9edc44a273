#include "cfgp/gp.hpp"

#include <cmath>

namespace cfgp {

JitteredChol cholesky_with_jitter(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  const double mean_diag = A.diagonal().mean();
  JitteredChol out;
  for (double eta = 1e-10; eta <= 1.0000001e-6; eta *= 10.0) {
    const double add = eta * mean_diag;
    Mat Aj = A;
    Aj.diagonal().array() += add;
    out.llt.compute(Aj);
    if (out.llt.info() == Eigen::Success) {
      // Guard against LLT "success" with a non-positive pivot on some BLAS paths.
      if ((out.llt.matrixLLT().diagonal().array() > 0.0).all()) {
        out.eta = eta;
        out.jitter_abs = add;
        return out;
      }
    }
  }
  throw numerical_error(
      "covariance factorization failed after jitter escalation to 1e-6 "
      "(n=" + std::to_string(n) + ", mean diagonal=" + std::to_string(mean_diag) + ")");
}

AssembledMatrices assemble(const Dataset& data, const TrendBasis& basis,
                           const CombinedCovSpec& spec) {
  data.validate();
  spec.validate();
  if (data.d() != spec.input_dim() || data.m() != spec.fidelity_dim())
    throw std::invalid_argument("dataset and kernel spec dimensions disagree");

  AssembledMatrices am;
  am.parts = combined_cov_matrix(data.X, data.T, spec);
  JitteredChol jc = cholesky_with_jitter(am.parts.K0);
  am.K0 = am.parts.K0;
  am.K0.diagonal().array() += jc.jitter_abs;
  am.jitter_eta = jc.eta;
  am.jitter_abs = jc.jitter_abs;
  am.F = trend_matrix(data.X, data.T, basis, spec.fidelity.exponents_l);
  return am;
}

FittedModel::FittedModel(Dataset data, TrendBasis basis, CombinedCovSpec spec,
                         bool profile_sigma2)
    : data_(std::move(data)), basis_(std::move(basis)) {
  AssembledMatrices am = assemble(data_, basis_, spec);
  K0_ = std::move(am.K0);
  F_ = std::move(am.F);
  jitter_eta_ = am.jitter_eta;
  jitter_abs_ = am.jitter_abs;

  const int n = data_.n();
  const int p = static_cast<int>(F_.cols());
  if (n <= p)
    throw std::invalid_argument("need more observations than trend columns (n > p)");

  llt_.compute(K0_);
  if (llt_.info() != Eigen::Success) throw numerical_error("covariance factorization failed");

  const Mat Ki_F = llt_.solve(F_);
  const Mat P0 = F_.transpose() * Ki_F;
  plt_.compute(0.5 * (P0 + P0.transpose()));
  if (plt_.info() != Eigen::Success)
    throw numerical_error("normal matrix F' K^-1 F is not positive definite");

  const Vec Ki_y = llt_.solve(data_.y);
  const Vec beta = plt_.solve(F_.transpose() * Ki_y);
  const Vec resid = data_.y - F_ * beta;
  resid_alpha_ = llt_.solve(resid);

  hp_.spec = spec;
  hp_.beta = beta;
  if (profile_sigma2) {
    const double q = resid.dot(resid_alpha_);
    hp_.sigma2 = std::max(q / (n - p), 0.0);
    if (hp_.sigma2 <= 0.0) hp_.sigma2 = 1e-300;  // degenerate perfect trend fit
    hp_.spec.sigma2 = hp_.sigma2;
  } else {
    hp_.sigma2 = spec.sigma2;
  }
}

void FittedModel::posterior(const Vec& x, const Vec& t, double& mean, double& variance) const {
  if (x.size() != data_.d()) throw std::invalid_argument("posterior: input dimension mismatch");
  if (t.size() != data_.m()) throw std::invalid_argument("posterior: fidelity dimension mismatch");
  if (!x.allFinite() || (x.array() < 0.0).any() || (x.array() > 1.0).any())
    throw std::invalid_argument("posterior: x must lie in the unit cube");
  if ((t.array() < 0.0).any())
    throw std::invalid_argument("posterior: fidelity components must be nonnegative");

  const CombinedCovSpec& spec = hp_.spec;
  const Vec k0 = combined_cov_vector(data_.X, data_.T, x, t, spec);
  const Vec f = trend_eval(x, t, basis_, spec.fidelity.exponents_l);

  const Vec Ki_k = llt_.solve(k0);
  mean = f.dot(hp_.beta) + k0.dot(resid_alpha_);

  const double prior0 = 1.0 + fidelity_cov(t, t, spec.fidelity);
  const Vec gam = f - F_.transpose() * Ki_k;
  double v0 = prior0 - k0.dot(Ki_k) + gam.dot(plt_.solve(gam));
  variance = hp_.sigma2 * std::max(v0, 0.0);
}

void FittedModel::posterior_many(const Mat& Xq, const Mat& Tq, Vec& mean, Vec& variance) const {
  const int q = static_cast<int>(Xq.rows());
  mean.resize(q);
  variance.resize(q);
  for (int i = 0; i < q; ++i) {
    double mu, var;
    posterior(Xq.row(i).transpose(), Tq.row(i).transpose(), mu, var);
    mean[i] = mu;
    variance[i] = var;
  }
}

}  // namespace cfgp
