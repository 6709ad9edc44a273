#include "cfgp/inference.hpp"

#include "cfgp/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

namespace cfgp {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void append_number(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_vec(std::string& out, const Vec& v) {
  out += '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    append_number(out, v[i]);
  }
  out += ']';
}

}  // namespace

Vec ParamTransform::lower() const {
  Vec lo(dim());
  lo.segment(0, 2 * d).setConstant(log_phi_lo);
  lo.segment(2 * d, m).setConstant(log_a_lo);
  lo[2 * d + m] = fix_gamma ? logit_from_gamma(*fix_gamma) : -logit_cap;
  return lo;
}

Vec ParamTransform::upper() const {
  Vec hi(dim());
  hi.segment(0, 2 * d).setConstant(log_phi_hi);
  hi.segment(2 * d, m).setConstant(log_a_hi);
  hi[2 * d + m] = fix_gamma ? logit_from_gamma(*fix_gamma) : logit_cap;
  return hi;
}

double ParamTransform::gamma_from_logit(double sg) const {
  const double sig = 1.0 / (1.0 + std::exp(-sg));
  return gamma_lo + (gamma_hi - gamma_lo) * sig;
}

double ParamTransform::logit_from_gamma(double gamma) const {
  const double u = clamp((gamma - gamma_lo) / (gamma_hi - gamma_lo), 1e-12, 1.0 - 1e-12);
  return clamp(std::log(u / (1.0 - u)), -logit_cap, logit_cap);
}

Vec ParamTransform::to_unconstrained(const CombinedCovSpec& spec) const {
  Vec s(dim());
  for (int i = 0; i < d; ++i)
    s[i] = clamp(std::log(spec.corr_phi1.phi[i]), log_phi_lo, log_phi_hi);
  for (int i = 0; i < d; ++i)
    s[d + i] = clamp(std::log(spec.corr_phi2.phi[i]), log_phi_lo, log_phi_hi);
  for (int j = 0; j < m; ++j)
    s[2 * d + j] = clamp(std::log(spec.fidelity.scale_a[j]), log_a_lo, log_a_hi);
  s[2 * d + m] = logit_from_gamma(fix_gamma ? *fix_gamma : spec.fidelity.gamma);
  return s;
}

CombinedCovSpec ParamTransform::to_spec(const Vec& s) const {
  CombinedCovSpec spec;
  spec.sigma2 = 1.0;
  spec.corr_phi1.family = family1;
  spec.corr_phi2.family = family2;
  spec.corr_phi1.phi = s.segment(0, d).array().exp().matrix();
  spec.corr_phi2.phi = s.segment(d, d).array().exp().matrix();
  spec.fidelity.scale_a = s.segment(2 * d, m).array().exp().matrix();
  spec.fidelity.exponents_l = exponents_l;
  spec.fidelity.gamma = fix_gamma ? *fix_gamma : gamma_from_logit(s[2 * d + m]);
  return spec;
}

Vec ParamTransform::pullback_gradient(const Vec& natural_grad, const Vec& s) const {
  Vec g(dim());
  for (int i = 0; i < 2 * d + m; ++i) g[i] = natural_grad[i] * std::exp(s[i]);
  if (fix_gamma) {
    g[2 * d + m] = 0.0;
  } else {
    const double sig = 1.0 / (1.0 + std::exp(-s[2 * d + m]));
    g[2 * d + m] = natural_grad[2 * d + m] * (gamma_hi - gamma_lo) * sig * (1.0 - sig);
  }
  return g;
}

struct LikelihoodEvaluator::Factored {
  AssembledMatrices am;
  Eigen::LLT<Mat> llt;   // of jittered K0
  Mat U;                 // K0^-1 F
  Mat P0;
  Eigen::LLT<Mat> plt;
  Vec alpha;             // K0^-1 Z
  Vec cvec;              // (K0^-1 - K0^-1 F P0^-1 F' K0^-1) Z
  double Q = 0.0;
  double logdetK0 = 0.0;
  double logdetP0 = 0.0;
};

LikelihoodEvaluator::LikelihoodEvaluator(Dataset data, TrendBasis basis)
    : data_(std::move(data)), basis_(basis) {
  data_.validate();
  refresh_trend(Vec::Constant(data_.m(), 4.0));
  if (data_.n() <= static_cast<int>(F_.cols()))
    throw config_error("likelihood requires n > p (trend columns)");
}

void LikelihoodEvaluator::refresh_trend(const Vec& exponents_l) const {
  if (F_.size() != 0 && cached_exponents_.size() == exponents_l.size()) {
    bool same = true;
    for (int j = 0; j < exponents_l.size(); ++j)
      if (cached_exponents_[j] != exponents_l[j]) { same = false; break; }
    if (same) return;
  }
  F_ = trend_matrix(data_.X, data_.T, basis_, exponents_l);
  Eigen::ColPivHouseholderQR<Mat> qr(F_);
  Z_ = data_.y - F_ * qr.solve(data_.y);
  cached_exponents_ = exponents_l;
}

bool LikelihoodEvaluator::factor(const CombinedCovSpec& spec, Factored& out) const {
  refresh_trend(spec.fidelity.exponents_l);
  out.am = assemble(data_, basis_, spec);
  out.llt.compute(out.am.K0);
  if (out.llt.info() != Eigen::Success) return false;
  const Mat& L = out.llt.matrixLLT();
  out.logdetK0 = 0.0;
  for (int i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) return false;
    out.logdetK0 += 2.0 * std::log(L(i, i));
  }
  out.U = out.llt.solve(out.am.F);
  out.P0 = out.am.F.transpose() * out.U;
  out.P0 = 0.5 * (out.P0 + out.P0.transpose()).eval();
  out.plt.compute(out.P0);
  if (out.plt.info() != Eigen::Success) return false;
  const Mat& Lp = out.plt.matrixLLT();
  out.logdetP0 = 0.0;
  for (int i = 0; i < Lp.rows(); ++i) {
    if (!(Lp(i, i) > 0.0)) return false;
    out.logdetP0 += 2.0 * std::log(Lp(i, i));
  }
  out.alpha = out.llt.solve(Z_);
  Vec w = out.U.transpose() * Z_;
  out.cvec = out.alpha - out.U * out.plt.solve(w);
  out.Q = Z_.dot(out.cvec);
  return true;
}

double LikelihoodEvaluator::value(const CombinedCovSpec& spec) const {
  Factored f;
  if (!factor(spec, f)) return -std::numeric_limits<double>::infinity();
  const int n = this->n();
  const int p = this->p();
  if (!(f.Q > 0.0) || !std::isfinite(f.Q))
    return -std::numeric_limits<double>::infinity();
  return -0.5 * (n - p) * std::log(f.Q) - 0.5 * f.logdetK0 - 0.5 * f.logdetP0;
}

double LikelihoodEvaluator::value_and_gradient(const CombinedCovSpec& spec, Vec& grad) const {
  const KernelParamIndex idx{data_.d(), data_.m()};
  grad = Vec::Zero(idx.count());
  Factored f;
  if (!factor(spec, f)) return -std::numeric_limits<double>::infinity();
  const int n = this->n();
  const int p = this->p();
  if (!(f.Q > 0.0) || !std::isfinite(f.Q))
    return -std::numeric_limits<double>::infinity();
  const double value = -0.5 * (n - p) * std::log(f.Q) - 0.5 * f.logdetK0 - 0.5 * f.logdetP0;

  // d l / d theta = ((n-p)/2) c'Dc / Q - (1/2) tr((K0^-1 - K0^-1 F P0^-1 F' K0^-1) D)
  Mat Kinv = f.llt.solve(Mat::Identity(n, n));
  Mat A = Kinv - f.U * f.plt.solve(f.U.transpose());
  for (int k = 0; k < idx.count(); ++k) {
    Mat D = combined_cov_matrix_grad(data_.X, data_.T, spec, f.am.parts, k);
    const double quad = f.cvec.dot(D * f.cvec);
    const double tr = (A.array() * D.array()).sum();
    grad[k] = 0.5 * ((n - p) * quad / f.Q - tr);
  }
  return value;
}

void LikelihoodEvaluator::beta_sigma2(const CombinedCovSpec& spec, Vec& beta,
                                      double& sigma2) const {
  Factored f;
  if (!factor(spec, f))
    throw numerical_error("covariance factorization failed in beta_sigma2");
  beta = f.plt.solve(f.U.transpose() * data_.y);
  Vec r = data_.y - f.am.F * beta;
  Vec kr = f.llt.solve(r);
  sigma2 = r.dot(kr) / static_cast<double>(n() - p());
  if (!(sigma2 > 0.0)) sigma2 = 1e-300;
}

double profile_loglik(const Dataset& data, const TrendBasis& basis,
                      const CombinedCovSpec& spec) {
  LikelihoodEvaluator ev(data, basis);
  return ev.value(spec);
}

Vec loglik_grad(const Dataset& data, const TrendBasis& basis, const CombinedCovSpec& spec) {
  LikelihoodEvaluator ev(data, basis);
  Vec g;
  ev.value_and_gradient(spec, g);
  return g;
}

void estimate_beta_sigma(const Dataset& data, const TrendBasis& basis,
                         const CombinedCovSpec& spec, Vec& beta, double& sigma2) {
  LikelihoodEvaluator ev(data, basis);
  ev.beta_sigma2(spec, beta, sigma2);
}

FitReport fit_mle(const Dataset& data, const TrendBasis& basis, const FitConfig& config) {
  const int d = data.d();
  const int m = data.m();
  ParamTransform tf;
  tf.d = d;
  tf.m = m;
  tf.family1 = config.family1;
  tf.family2 = config.family2;
  if (config.exponents_l.size() == m)
    tf.exponents_l = config.exponents_l;
  else
    tf.exponents_l = Vec::Constant(m, 4.0);
  tf.gamma_lo = config.gamma_lo;
  tf.gamma_hi = config.gamma_hi;
  tf.fix_gamma = config.fix_gamma;

  LikelihoodEvaluator ev(data, basis);
  const Vec lo = tf.lower();
  const Vec hi = tf.upper();

  Objective obj = [&](const Vec& s, Vec& grad) -> double {
    Vec natural;
    const double val = ev.value_and_gradient(tf.to_spec(s), natural);
    if (!std::isfinite(val)) {
      grad = Vec::Zero(s.size());
      return std::numeric_limits<double>::infinity();
    }
    grad = -tf.pullback_gradient(natural, s);
    return -val;
  };

  std::vector<Vec> starts;
  for (const CombinedCovSpec& w : config.extra_starts) starts.push_back(tf.to_unconstrained(w));
  Halton halton(tf.dim(), config.seed);
  for (int i = 0; i < config.n_starts; ++i) {
    Vec u = halton.point(i);
    starts.push_back(lo + (hi - lo).cwiseProduct(u));
  }

  LbfgsOptions opts;
  opts.max_iters = config.max_iters;
  opts.grad_tol = config.grad_tol;

  FitReport report;
  report.config = config;
  report.config.exponents_l = tf.exponents_l;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    LbfgsResult res = lbfgs_minimize(obj, starts[i], lo, hi, opts);
    StartRecord rec;
    rec.start = starts[i];
    rec.end = res.x;
    rec.value = std::isfinite(res.f) ? -res.f : -std::numeric_limits<double>::infinity();
    rec.iters = res.iters;
    rec.converged = res.converged;
    report.starts.push_back(std::move(rec));
    if (report.starts.back().value > report.loglik) {
      report.loglik = report.starts.back().value;
      report.best_index = static_cast<int>(i);
    }
  }
  if (report.best_index < 0)
    throw numerical_error("every optimizer start failed to produce a finite likelihood");

  const Vec& s_best = report.starts[report.best_index].end;
  CombinedCovSpec best = tf.to_spec(s_best);
  Vec beta;
  double sigma2 = 0.0;
  ev.beta_sigma2(best, beta, sigma2);
  best.sigma2 = sigma2;
  report.best.spec = best;
  report.best.beta = beta;
  report.best.sigma2 = sigma2;

  Vec natural;
  const double val = ev.value_and_gradient(report.best.spec, natural);
  if (std::isfinite(val)) {
    Vec g = tf.pullback_gradient(natural, s_best);
    // projected-gradient norm: zero at active box faces pointing outward
    double pg = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      const double moved = clamp(s_best[i] + g[i], lo[i], hi[i]) - s_best[i];
      pg = std::max(pg, std::abs(moved));
    }
    report.grad_norm = pg;
  }
  return report;
}

FittedModel fit_mle_model(const Dataset& data, const TrendBasis& basis, const FitConfig& config,
                          FitReport* report) {
  FitReport rep = fit_mle(data, basis, config);
  FittedModel model(data, basis, rep.best.spec);
  if (report) *report = std::move(rep);
  return model;
}

std::string FitReport::to_json() const {
  std::string out = "{\"loglik\":";
  append_number(out, loglik);
  out += ",\"grad_norm\":";
  append_number(out, grad_norm);
  out += ",\"best_index\":" + std::to_string(best_index);
  out += ",\"best\":{\"sigma2\":";
  append_number(out, best.sigma2);
  out += ",\"phi1\":";
  append_vec(out, best.spec.corr_phi1.phi);
  out += ",\"phi2\":";
  append_vec(out, best.spec.corr_phi2.phi);
  out += ",\"a\":";
  append_vec(out, best.spec.fidelity.scale_a);
  out += ",\"l\":";
  append_vec(out, best.spec.fidelity.exponents_l);
  out += ",\"gamma\":";
  append_number(out, best.spec.fidelity.gamma);
  out += ",\"family1\":\"" + std::string(to_string(best.spec.corr_phi1.family)) + "\"";
  out += ",\"family2\":\"" + std::string(to_string(best.spec.corr_phi2.family)) + "\"";
  out += ",\"beta\":";
  append_vec(out, best.beta);
  out += "},\"starts\":[";
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (i) out += ',';
    out += "{\"value\":";
    append_number(out, starts[i].value);
    out += ",\"iters\":" + std::to_string(starts[i].iters);
    out += ",\"converged\":";
    out += starts[i].converged ? "true" : "false";
    out += '}';
  }
  out += "]}";
  return out;
}

double fisher_information(const Mat& X, const Mat& T, const CombinedCovSpec& spec, int i,
                          int j) {
  const int d = static_cast<int>(X.cols());
  const int m = static_cast<int>(T.cols());
  const KernelParamIndex idx{d, m};
  const int nparam = idx.count() + 1;
  if (i < 0 || j < 0 || i >= nparam || j >= nparam)
    throw config_error("fisher_information: parameter index out of range");
  CovParts parts = combined_cov_matrix(X, T, spec);
  JitteredChol jc = cholesky_with_jitter(parts.K0);
  const double s2 = spec.sigma2;

  auto dcov = [&](int q) -> Mat {
    if (q == 0) return parts.K0;  // d(sigma2 K0)/d sigma2
    return s2 * combined_cov_matrix_grad(X, T, spec, parts, q - 1);
  };
  // K^-1 dK_i with K = sigma2 * K0 (jitter held fixed)
  Mat Ai = jc.llt.solve(dcov(i)) / s2;
  Mat Aj = (i == j) ? Ai : Mat(jc.llt.solve(dcov(j)) / s2);
  return 0.5 * (Ai.array() * Aj.transpose().array()).sum();
}

double fisher_gamma(const Mat& X, const Mat& T, const CombinedCovSpec& spec) {
  const KernelParamIndex idx{static_cast<int>(X.cols()), static_cast<int>(T.cols())};
  const int gamma_index = 1 + 2 * idx.d + idx.m;
  return fisher_information(X, T, spec, gamma_index, gamma_index);
}

}  // namespace cfgp
