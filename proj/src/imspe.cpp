#include "cfgp/imspe.hpp"

#include "cfgp/kernel.hpp"
#include "cfgp/lbfgs.hpp"
#include "cfgp/rng.hpp"

#include <algorithm>
#include <numeric>

namespace cfgp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct CoreFactors {
  double jitter_abs = 0.0;
  Eigen::LLT<Mat> llt;  // of K0 + jitter I (unit variance scale)
  Mat F;
  CovParts parts;
};

CoreFactors build_core(const Dataset& data, const TrendBasis& basis,
                       const CombinedCovSpec& spec, const ImspeOptions& opts) {
  data.validate();
  spec.validate();
  if (spec.input_dim() != data.d() || spec.fidelity_dim() != data.m())
    throw config_error("imspe: covariance spec dimensions do not match the data");
  CoreFactors cf;
  cf.parts = combined_cov_matrix(data.X, data.T, spec);
  if (opts.jitter_abs) {
    cf.jitter_abs = *opts.jitter_abs;
    Mat K0j = cf.parts.K0 + cf.jitter_abs * Mat::Identity(data.n(), data.n());
    cf.llt.compute(K0j);
    if (cf.llt.info() != Eigen::Success)
      throw numerical_error("covariance factorization failed at the requested shift");
  } else {
    JitteredChol jc = cholesky_with_jitter(cf.parts.K0);
    cf.jitter_abs = jc.jitter_abs;
    cf.llt = std::move(jc.llt);
  }
  cf.F = trend_matrix(data.X, data.T, basis, spec.fidelity.exponents_l);
  if (data.n() <= cf.F.cols())
    throw config_error("imspe requires n > p (trend columns)");
  return cf;
}

struct ImspePieces {
  Mat kinv, J, psi, W, H, G, C;
  ImspeComponents comp;
};

ImspePieces build_pieces(const Dataset& data, const TrendBasis& basis,
                         const CombinedCovSpec& spec, const CoreFactors& cf) {
  const int n = data.n();
  const double s2 = spec.sigma2;
  ImspePieces pz;
  pz.kinv = cf.llt.solve(Mat::Identity(n, n)) / s2;
  pz.kinv = (0.5 * (pz.kinv + pz.kinv.transpose())).eval();
  pz.J = pz.kinv * cf.F;
  Mat P = cf.F.transpose() * pz.J;
  P = (0.5 * (P + P.transpose())).eval();
  Eigen::LLT<Mat> plt(P);
  if (plt.info() != Eigen::Success)
    throw numerical_error("trend information matrix is not positive definite");
  pz.psi = plt.solve(Mat::Identity(P.rows(), P.cols()));
  pz.psi = (0.5 * (pz.psi + pz.psi.transpose())).eval();

  pz.W = w_matrix(data.X, spec.corr_phi1, s2);
  pz.H = h_matrix(data.X, basis, spec.corr_phi1, s2);
  pz.G = g_matrix(basis, data.d());
  pz.C = pz.J.transpose() * pz.H;

  ImspeComponents& c = pz.comp;
  c.E = s2;
  c.jitter_abs = cf.jitter_abs;
  c.tr_kinv_w = (pz.kinv.array() * pz.W.array()).sum();
  Mat JPsi = pz.J * pz.psi;
  c.tr_m_w = (JPsi.array() * (pz.W * pz.J).array()).sum();
  c.tr_pinv_g = (pz.psi.array() * pz.G.array()).sum();
  c.tr_pgls_h = (pz.psi.array() * pz.C.transpose().array()).sum();
  c.value = c.E - c.tr_kinv_w + c.tr_m_w + c.tr_pinv_g - 2.0 * c.tr_pgls_h;
  return pz;
}

}  // namespace

ImspeComponents imspe_closed(const Dataset& data, const TrendBasis& basis,
                             const CombinedCovSpec& spec, const ImspeOptions& opts) {
  CoreFactors cf = build_core(data, basis, spec, opts);
  return build_pieces(data, basis, spec, cf).comp;
}

ImspeState::ImspeState(const Dataset& data, const TrendBasis& basis,
                       const CombinedCovSpec& spec, const ImspeOptions& opts)
    : data_(data), basis_(basis), spec_(spec) {
  CoreFactors cf = build_core(data_, basis_, spec_, opts);
  jitter_abs_ = cf.jitter_abs;
  F_ = cf.F;
  ImspePieces pz = build_pieces(data_, basis_, spec_, cf);
  imspe_ = pz.comp.value;
  kinv_ = std::move(pz.kinv);
  J_ = std::move(pz.J);
  psi_ = std::move(pz.psi);
  W_ = std::move(pz.W);
  H_ = std::move(pz.H);
  G_ = std::move(pz.G);
  C_ = std::move(pz.C);
}

double ImspeState::reduction(const Vec& xstar, const Vec& tstar) const {
  const double s2 = spec_.sigma2;
  Vec k = s2 * combined_cov_vector(data_.X, data_.T, xstar, tstar, spec_);
  const double kappa =
      s2 * (1.0 + fidelity_cov(tstar, tstar, spec_.fidelity) + jitter_abs_);
  Vec kik = kinv_ * k;
  const double st2 = kappa - k.dot(kik);
  if (!(st2 > 1e-10 * s2)) return kNegInf;  // numerically a duplicate
  const double st = std::sqrt(st2);

  Vec a = -kik / st2;
  Vec f = trend_eval(xstar, tstar, basis_, spec_.fidelity.exponents_l);
  Vec v = st * (F_.transpose() * a) + f / st;
  Vec pv = psi_ * v;
  const double denom = 1.0 + v.dot(pv);

  Vec wt = w_vector(data_.X, xstar, spec_.corr_phi1, s2);
  const double w0 = w_scalar(xstar, spec_.corr_phi1, s2);
  Vec ht = h_vector(xstar, basis_, spec_.corr_phi1, s2);

  Vec wa = W_ * a;
  const double d1 = st2 * a.dot(wa) + 2.0 * a.dot(wt) + w0 / st2;

  Vec q = J_.transpose() * (st * wa + wt / st);
  Vec jpv = J_ * pv;
  const double tr_bjwj = jpv.dot(W_ * jpv) / denom;
  const double vpv = denom - 1.0;
  const double d2 = -tr_bjwj + 2.0 * q.dot(pv) / denom + d1 * vpv / denom;

  const double d3 = -pv.dot(G_ * pv) / denom;

  Vec r = st * (H_.transpose() * a) + ht / st;
  const double d4 = -pv.dot(C_ * pv) / denom + r.dot(pv) / denom;

  return d1 - d2 - d3 + 2.0 * d4;
}

CriterionResult optimize_criterion(const ImspeState& state, const CostModel& cost,
                                   const CriterionOptions& opts) {
  const int d = state.data().d();
  const int m = state.data().m();
  cost.validate();
  if (cost.fidelity_dim() != m)
    throw config_error("optimize_criterion: cost model fidelity dimension mismatch");
  if (opts.t_lo.size() != m || opts.t_hi.size() != m)
    throw config_error("optimize_criterion: fidelity bounds must match the design");
  for (int j = 0; j < m; ++j)
    if (!(opts.t_lo[j] > 0.0) || !(opts.t_hi[j] >= opts.t_lo[j]))
      throw config_error("optimize_criterion: need 0 < t_lo <= t_hi");
  if (opts.n_probes < 1) throw config_error("optimize_criterion: n_probes must be >= 1");

  const int dim = d + m;
  Vec lo(dim), hi(dim);
  lo.head(d).setZero();
  hi.head(d).setOnes();
  lo.tail(m) = opts.t_lo;
  hi.tail(m) = opts.t_hi;

  auto ratio = [&](const Vec& z) -> double {
    const double red = state.reduction(z.head(d), z.tail(m));
    if (!std::isfinite(red)) return kNegInf;
    return red / cost.eval(z.tail(m));
  };

  Halton halton(dim, opts.seed);
  std::vector<Vec> probe(opts.n_probes);
  std::vector<double> pval(opts.n_probes);
  Vec zbest;
  double vbest = kNegInf;
  for (int i = 0; i < opts.n_probes; ++i) {
    probe[i] = lo + (hi - lo).cwiseProduct(halton.point(i));
    pval[i] = ratio(probe[i]);
    if (pval[i] > vbest) {
      vbest = pval[i];
      zbest = probe[i];
    }
  }

  CriterionResult res;
  if (!(vbest > kNegInf)) return res;  // nothing admissible in the box

  Objective obj = [&](const Vec& z, Vec& grad) -> double {
    const double f0 = ratio(z);
    grad = Vec::Zero(dim);
    if (!std::isfinite(f0)) return std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim; ++i) {
      const double step = opts.fd_step_frac * (hi[i] - lo[i]);
      if (step <= 0.0) continue;
      Vec zp = z, zm = z;
      zp[i] = std::min(z[i] + step, hi[i]);
      zm[i] = std::max(z[i] - step, lo[i]);
      if (zp[i] == zm[i]) continue;
      const double fp = ratio(zp);
      const double fm = ratio(zm);
      if (!std::isfinite(fp) || !std::isfinite(fm)) continue;
      grad[i] = -(fp - fm) / (zp[i] - zm[i]);
    }
    return -f0;
  };

  std::vector<int> order(opts.n_probes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pval[a] > pval[b]; });

  LbfgsOptions lopt;
  lopt.max_iters = opts.max_iters;
  const int n_polish = std::min<int>(opts.n_starts, opts.n_probes);
  for (int rank = 0; rank < n_polish; ++rank) {
    const int i = order[rank];
    if (!(pval[i] > kNegInf)) break;  // remaining probes all degenerate
    LbfgsResult lb = lbfgs_minimize(obj, probe[i], lo, hi, lopt);
    if (!std::isfinite(lb.f)) continue;
    const double val = -lb.f;
    if (val > vbest) {
      vbest = val;
      zbest = lb.x;
    }
  }

  res.found = true;
  res.x = zbest.head(d);
  res.t = zbest.tail(m);
  res.reduction = state.reduction(res.x, res.t);
  res.cost = cost.eval(res.t);
  res.value = vbest;
  return res;
}

}  // namespace cfgp
