#include "cfgp/kernel.hpp"

#include <cmath>

namespace cfgp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

void check_h(const Vec& h, const CorrelationSpec& spec) {
  spec.validate();
  if (h.size() != spec.dim())
    throw std::invalid_argument("difference vector dimension mismatch");
  if (!h.allFinite()) throw std::invalid_argument("difference vector must be finite");
}

// Per-dimension sums u_j = a_j t_j^{l_j} and the scaled p-norm machinery
// shared by the fidelity kernel and its gradients.  All power sums are
// normalized by the largest participating u so the base of every pow() call
// stays in [0,1].
struct FidelityTerms {
  Vec u1, u2;     // m
  double m1 = 0;  // max_j u1_j
  double m2 = 0;  // max_j u2_j
  double m3 = 0;  // max(m1, m2)
  double s1 = 0;  // sum_j (u1_j/m1)^{1/gamma}
  double s2 = 0;
  double s3 = 0;  // sum_j ((u1_j/m3)^{1/(2g)} - (u2_j/m3)^{1/(2g)})^2
  Vec r1, r2;     // (u/m)^{1/gamma} per dimension, own scales
  Vec v1, v2;     // (u/m3)^{1/(2 gamma)} per dimension, shared scale
};

FidelityTerms fidelity_terms(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec) {
  spec.validate();
  const int m = spec.dim();
  if (t1.size() != m || t2.size() != m)
    throw std::invalid_argument("fidelity vector dimension mismatch");
  if (!t1.allFinite() || !t2.allFinite() || (t1.array() < 0.0).any() || (t2.array() < 0.0).any())
    throw std::invalid_argument("fidelity components must be finite and nonnegative");

  FidelityTerms ft;
  ft.u1.resize(m);
  ft.u2.resize(m);
  for (int j = 0; j < m; ++j) {
    ft.u1[j] = spec.scale_a[j] * std::pow(t1[j], spec.exponents_l[j]);
    ft.u2[j] = spec.scale_a[j] * std::pow(t2[j], spec.exponents_l[j]);
  }
  ft.m1 = ft.u1.maxCoeff();
  ft.m2 = ft.u2.maxCoeff();
  ft.m3 = std::max(ft.m1, ft.m2);

  const double ginv = 1.0 / spec.gamma;
  ft.r1 = Vec::Zero(m);
  ft.r2 = Vec::Zero(m);
  ft.v1 = Vec::Zero(m);
  ft.v2 = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    if (ft.m1 > 0.0 && ft.u1[j] > 0.0) ft.r1[j] = std::pow(ft.u1[j] / ft.m1, ginv);
    if (ft.m2 > 0.0 && ft.u2[j] > 0.0) ft.r2[j] = std::pow(ft.u2[j] / ft.m2, ginv);
    if (ft.m3 > 0.0 && ft.u1[j] > 0.0) ft.v1[j] = std::pow(ft.u1[j] / ft.m3, 0.5 * ginv);
    if (ft.m3 > 0.0 && ft.u2[j] > 0.0) ft.v2[j] = std::pow(ft.u2[j] / ft.m3, 0.5 * ginv);
  }
  ft.s1 = ft.r1.sum();
  ft.s2 = ft.r2.sum();
  ft.s3 = (ft.v1 - ft.v2).array().square().sum();
  return ft;
}

}  // namespace

double corr_eval_1d(CorrFamily family, double phi, double h) {
  const double w = std::abs(h);
  switch (family) {
    case CorrFamily::Gaussian:
      return std::exp(-phi * phi * h * h);
    case CorrFamily::Matern05:
      return std::exp(-phi * w);
    case CorrFamily::Matern15: {
      const double z = kSqrt3 * phi * w;
      return (1.0 + z) * std::exp(-z);
    }
    case CorrFamily::Matern25: {
      const double z = kSqrt5 * phi * w;
      return (1.0 + z + (5.0 / 3.0) * phi * phi * h * h) * std::exp(-z);
    }
  }
  return 0.0;
}

double corr_grad_phi_1d(CorrFamily family, double phi, double h) {
  const double w = std::abs(h);
  switch (family) {
    case CorrFamily::Gaussian:
      return -2.0 * phi * h * h * std::exp(-phi * phi * h * h);
    case CorrFamily::Matern05:
      return -w * std::exp(-phi * w);
    case CorrFamily::Matern15:
      return -3.0 * phi * h * h * std::exp(-kSqrt3 * phi * w);
    case CorrFamily::Matern25:
      return -(5.0 / 3.0) * (phi * h * h + kSqrt5 * phi * phi * w * w * w) *
             std::exp(-kSqrt5 * phi * w);
  }
  return 0.0;
}

double corr_eval(const Vec& h, const CorrelationSpec& spec) {
  check_h(h, spec);
  // The exponential families multiply more accurately through the exponent.
  if (spec.family == CorrFamily::Gaussian) {
    double q = 0.0;
    for (int r = 0; r < h.size(); ++r) q += spec.phi[r] * spec.phi[r] * h[r] * h[r];
    return std::exp(-q);
  }
  if (spec.family == CorrFamily::Matern05) {
    double q = 0.0;
    for (int r = 0; r < h.size(); ++r) q += spec.phi[r] * std::abs(h[r]);
    return std::exp(-q);
  }
  double prod = 1.0;
  for (int r = 0; r < h.size(); ++r) prod *= corr_eval_1d(spec.family, spec.phi[r], h[r]);
  return prod;
}

double corr_grad_phi(const Vec& h, const CorrelationSpec& spec, int i) {
  check_h(h, spec);
  if (i < 0 || i >= spec.dim()) throw std::invalid_argument("phi index out of range");
  double prod = 1.0;
  for (int r = 0; r < h.size(); ++r) {
    if (r == i) continue;
    prod *= corr_eval_1d(spec.family, spec.phi[r], h[r]);
  }
  return prod * corr_grad_phi_1d(spec.family, spec.phi[i], h[i]);
}

double fidelity_cov(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec) {
  const FidelityTerms ft = fidelity_terms(t1, t2, spec);
  // If either argument is the zero fidelity, S3 telescopes against the
  // surviving S term and the kernel vanishes identically.
  if (ft.m1 == 0.0 || ft.m2 == 0.0) return 0.0;
  const double g = spec.gamma;
  double k = ft.m1 * std::pow(ft.s1, g) + ft.m2 * std::pow(ft.s2, g);
  if (ft.s3 > 0.0) k -= ft.m3 * std::pow(ft.s3, g);
  k *= 0.5;
  return k < 0.0 ? 0.0 : k;  // clamp roundoff; the kernel is nonnegative
}

double fidelity_cov_grad_gamma(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec) {
  const FidelityTerms ft = fidelity_terms(t1, t2, spec);
  // Identically zero along gamma whenever one argument is the zero fidelity.
  if (ft.m1 == 0.0 || ft.m2 == 0.0) return 0.0;
  const double g = spec.gamma;

  // Each power sum contributes d/dgamma of M s^gamma =
  //   M [ s^g ln s - s^{g-1} (1/g) dlog_sum ],
  // where dlog_sum collects the w^{1/(q g)} ln(w) chain-rule terms (taken as
  // 0 at w = 0, their analytic limit).  The same form covers S3: the 1/2 in
  // its exponent cancels against the square's chain rule.
  const auto d_sum = [&](double M, double s, auto&& dlog_sum) -> double {
    if (M <= 0.0 || s <= 0.0) return 0.0;
    return M * (std::pow(s, g) * std::log(s) - std::pow(s, g - 1.0) * dlog_sum() / g);
  };

  const double d1 = d_sum(ft.m1, ft.s1, [&] {
    double acc = 0.0;
    for (int j = 0; j < ft.r1.size(); ++j)
      if (ft.u1[j] > 0.0) acc += ft.r1[j] * std::log(ft.u1[j] / ft.m1);
    return acc;
  });
  const double d2 = d_sum(ft.m2, ft.s2, [&] {
    double acc = 0.0;
    for (int j = 0; j < ft.r2.size(); ++j)
      if (ft.u2[j] > 0.0) acc += ft.r2[j] * std::log(ft.u2[j] / ft.m2);
    return acc;
  });
  const double d3 = d_sum(ft.m3, ft.s3, [&] {
    double acc = 0.0;
    for (int j = 0; j < ft.v1.size(); ++j) {
      double term = 0.0;
      if (ft.u1[j] > 0.0) term += ft.v1[j] * std::log(ft.u1[j] / ft.m3);
      if (ft.u2[j] > 0.0) term -= ft.v2[j] * std::log(ft.u2[j] / ft.m3);
      acc += (ft.v1[j] - ft.v2[j]) * term;
    }
    return acc;
  });

  return 0.5 * (d1 + d2 - d3);
}

double fidelity_cov_grad_a(const Vec& t1, const Vec& t2, const FidelityKernelSpec& spec, int j) {
  const FidelityTerms ft = fidelity_terms(t1, t2, spec);
  if (j < 0 || j >= spec.dim()) throw std::invalid_argument("scale index out of range");
  if (ft.m1 == 0.0 || ft.m2 == 0.0) return 0.0;
  const double g = spec.gamma;

  double acc = 0.0;
  if (ft.m1 > 0.0 && ft.s1 > 0.0) acc += ft.m1 * std::pow(ft.s1, g - 1.0) * ft.r1[j];
  if (ft.m2 > 0.0 && ft.s2 > 0.0) acc += ft.m2 * std::pow(ft.s2, g - 1.0) * ft.r2[j];
  if (ft.m3 > 0.0 && ft.s3 > 0.0) {
    const double dv = ft.v1[j] - ft.v2[j];
    acc -= ft.m3 * std::pow(ft.s3, g - 1.0) * dv * dv;
  }
  return acc / (2.0 * spec.scale_a[j]);
}

double combined_cov(const Vec& x1, const Vec& t1, const Vec& x2, const Vec& t2,
                    const CombinedCovSpec& spec) {
  spec.validate();
  if (x1.size() != spec.input_dim() || x2.size() != spec.input_dim())
    throw std::invalid_argument("input dimension mismatch");
  const Vec h = x1 - x2;
  const double r1 = corr_eval(h, spec.corr_phi1);
  const double r2 = corr_eval(h, spec.corr_phi2);
  const double kt = fidelity_cov(t1, t2, spec.fidelity);
  return spec.sigma2 * (r1 + r2 * kt);
}

CovParts combined_cov_matrix(const Mat& X, const Mat& T, const CombinedCovSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(X.rows());
  CovParts parts;
  parts.R1.resize(n, n);
  parts.R2.resize(n, n);
  parts.Kt.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Vec h = (X.row(i) - X.row(j)).transpose();
      const double r1 = corr_eval(h, spec.corr_phi1);
      const double r2 = corr_eval(h, spec.corr_phi2);
      const double kt =
          fidelity_cov(T.row(i).transpose(), T.row(j).transpose(), spec.fidelity);
      parts.R1(i, j) = parts.R1(j, i) = r1;
      parts.R2(i, j) = parts.R2(j, i) = r2;
      parts.Kt(i, j) = parts.Kt(j, i) = kt;
    }
  }
  parts.K0 = parts.R1 + parts.R2.cwiseProduct(parts.Kt);
  return parts;
}

Mat combined_cov_matrix_grad(const Mat& X, const Mat& T, const CombinedCovSpec& spec,
                             const CovParts& parts, int k) {
  const KernelParamIndex idx{spec.input_dim(), spec.fidelity_dim()};
  if (k < 0 || k >= idx.count()) throw std::invalid_argument("kernel parameter index out of range");
  const int n = static_cast<int>(X.rows());
  Mat D(n, n);

  if (idx.is_phi1(k) || idx.is_phi2(k)) {
    const bool first = idx.is_phi1(k);
    const int dim = first ? idx.phi1_dim(k) : idx.phi2_dim(k);
    const CorrelationSpec& cs = first ? spec.corr_phi1 : spec.corr_phi2;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        const Vec h = (X.row(i) - X.row(j)).transpose();
        double g = corr_grad_phi(h, cs, dim);
        if (!first) g *= parts.Kt(i, j);
        D(i, j) = D(j, i) = g;
      }
    }
    return D;
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Vec ti = T.row(i).transpose();
      const Vec tj = T.row(j).transpose();
      const double dkt = idx.is_gamma(k)
                             ? fidelity_cov_grad_gamma(ti, tj, spec.fidelity)
                             : fidelity_cov_grad_a(ti, tj, spec.fidelity, idx.a_dim(k));
      D(i, j) = D(j, i) = parts.R2(i, j) * dkt;
    }
  }
  return D;
}

Vec combined_cov_vector(const Mat& X, const Mat& T, const Vec& x, const Vec& t,
                        const CombinedCovSpec& spec) {
  const int n = static_cast<int>(X.rows());
  Vec k0(n);
  for (int i = 0; i < n; ++i) {
    const Vec h = (x - X.row(i).transpose());
    k0[i] = corr_eval(h, spec.corr_phi1) +
            corr_eval(h, spec.corr_phi2) *
                fidelity_cov(t, T.row(i).transpose(), spec.fidelity);
  }
  return k0;
}

}  // namespace cfgp
