#include "cfgp/simulate.hpp"

#include "cfgp/gp.hpp"
#include "cfgp/kernel.hpp"
#include "cfgp/rng.hpp"

#include <cmath>

namespace cfgp {

double poisson_average(double x) {
  if (!(x >= -1.0 && x <= 1.0))
    throw config_error("poisson_average: x must lie in [-1, 1]");
  constexpr double pi = 3.14159265358979323846;
  return 2.0 * (std::exp(x) + 1.0) / (x * x + pi * pi);
}

GpDrawParams::GpDrawParams() {
  spec.sigma2 = 1.0;
  spec.corr_phi1 = CorrelationSpec{CorrFamily::Gaussian, Vec::Ones(1)};
  spec.corr_phi2 = CorrelationSpec{CorrFamily::Gaussian, Vec::Ones(1)};
  spec.fidelity.gamma = 0.5;
  spec.fidelity.scale_a = Vec::Ones(1);
  spec.fidelity.exponents_l = Vec::Constant(1, 4.0);
}

namespace {

void cartesian_fill(Mat& out, const std::vector<Vec>& axes) {
  const int dims = static_cast<int>(axes.size());
  long rows = 1;
  for (const Vec& ax : axes) rows *= ax.size();
  out.resize(rows, dims);
  for (long r = 0; r < rows; ++r) {
    long rem = r;
    for (int c = dims - 1; c >= 0; --c) {
      const long nc = axes[c].size();
      out(r, c) = axes[c][rem % nc];
      rem /= nc;
    }
  }
}

class GpDrawSimulator final : public Simulator {
 public:
  GpDrawSimulator(const GpDrawParams& params, std::uint64_t seed) : p_(params) {
    if (p_.d < 1 || p_.m < 1) throw config_error("gp_draw: need d >= 1, m >= 1");
    if (p_.nx < 2 || p_.nt < 2) throw config_error("gp_draw: lattice too small");
    if (!(p_.t_max > 0.0)) throw config_error("gp_draw: t_max must be positive");
    p_.spec.validate();
    if (p_.spec.input_dim() != p_.d || p_.spec.fidelity_dim() != p_.m)
      throw config_error("gp_draw: covariance spec dimensions do not match d, m");

    double total = std::pow(static_cast<double>(p_.nx), p_.d) *
                   std::pow(static_cast<double>(p_.nt), p_.m);
    if (total > p_.max_lattice)
      throw config_error("gp_draw: lattice of " + std::to_string(static_cast<long>(total)) +
                         " points exceeds the memory guard of " +
                         std::to_string(p_.max_lattice));

    std::vector<Vec> axes;
    for (int r = 0; r < p_.d; ++r) {
      Vec ax(p_.nx);
      for (int k = 0; k < p_.nx; ++k) ax[k] = static_cast<double>(k) / (p_.nx - 1);
      axes.push_back(ax);
    }
    Mat xg;
    cartesian_fill(xg, axes);

    axes.clear();
    for (int j = 0; j < p_.m; ++j) {
      Vec ax(p_.nt);
      for (int k = 0; k < p_.nt; ++k) ax[k] = p_.t_max * k / (p_.nt - 1);  // includes 0
      axes.push_back(ax);
    }
    Mat tg;
    cartesian_fill(tg, axes);

    const long nxp = xg.rows();
    const long ntp = tg.rows();
    const long n = nxp * ntp;
    X_.resize(n, p_.d);
    T_.resize(n, p_.m);
    for (long i = 0; i < nxp; ++i) {
      for (long k = 0; k < ntp; ++k) {
        X_.row(i * ntp + k) = xg.row(i);
        T_.row(i * ntp + k) = tg.row(k);
      }
    }

    CovParts parts = combined_cov_matrix(X_, T_, p_.spec);
    JitteredChol jc = cholesky_with_jitter(parts.K0);
    Rng rng(derive_seed(seed, 0x44524157));  // independent stream per simulator
    Vec z(n);
    for (long i = 0; i < n; ++i) z[i] = rng.normal();
    y_ = std::sqrt(p_.spec.sigma2) * (Mat(jc.llt.matrixL()) * z);
    alpha_ = jc.llt.solve(y_);  // sigma2 cancels between k and K^-1
  }

  double eval(const Vec& x, const Vec& t) const override {
    if (x.size() != p_.d || t.size() != p_.m)
      throw config_error("gp_draw: point dimension mismatch");
    for (int r = 0; r < p_.d; ++r)
      if (!(x[r] >= 0.0 && x[r] <= 1.0))
        throw config_error("gp_draw: x outside the unit cube");
    for (int j = 0; j < p_.m; ++j)
      if (!(t[j] >= 0.0)) throw config_error("gp_draw: negative fidelity");
    Vec k0 = combined_cov_vector(X_, T_, x, t, p_.spec);
    return k0.dot(alpha_);
  }

  int d() const override { return p_.d; }
  int m() const override { return p_.m; }

  const Mat& lattice_x() const { return X_; }
  const Mat& lattice_t() const { return T_; }
  const Vec& lattice_y() const { return y_; }

 private:
  GpDrawParams p_;
  Mat X_, T_;
  Vec y_;
  Vec alpha_;
};

class SyntheticSimulator final : public Simulator {
 public:
  SyntheticSimulator(ExactFn exact, ErrorShapeFn shape, double c, Vec l, int d, int m)
      : exact_(std::move(exact)), shape_(std::move(shape)), c_(c), l_(std::move(l)),
        d_(d), m_(m) {
    if (d_ < 1 || m_ < 1) throw config_error("synthetic simulator: need d >= 1, m >= 1");
    if (l_.size() != m_) throw config_error("synthetic simulator: exponent size mismatch");
    for (int j = 0; j < m_; ++j)
      if (!(l_[j] > 0.0)) throw config_error("synthetic simulator: exponents must be positive");
  }

  double eval(const Vec& x, const Vec& t) const override {
    if (x.size() != d_ || t.size() != m_)
      throw config_error("synthetic simulator: point dimension mismatch");
    double amp = c_;
    for (int j = 0; j < m_; ++j) {
      if (!(t[j] >= 0.0)) throw config_error("synthetic simulator: negative fidelity");
      amp *= std::pow(t[j], 0.5 * l_[j]);
    }
    const double base = exact_(x);
    if (amp == 0.0) return base;  // t = 0: exact by construction
    return base + amp * shape_(x, t);
  }

  int d() const override { return d_; }
  int m() const override { return m_; }

 private:
  ExactFn exact_;
  ErrorShapeFn shape_;
  double c_;
  Vec l_;
  int d_, m_;
};

}  // namespace

std::unique_ptr<Simulator> make_gp_draw(const GpDrawParams& params, std::uint64_t seed) {
  return std::make_unique<GpDrawSimulator>(params, seed);
}

std::unique_ptr<Simulator> make_synthetic(ExactFn exact, ErrorShapeFn shape, double c,
                                          const Vec& exponents_l, int d, int m) {
  return std::make_unique<SyntheticSimulator>(std::move(exact), std::move(shape), c,
                                              exponents_l, d, m);
}

std::unique_ptr<Simulator> make_simulator(const SimulatorSpec& spec) {
  if (spec.kind == "gp_draw") {
    GpDrawParams p = spec.gp;
    p.d = spec.d;
    p.m = spec.m;
    return make_gp_draw(p, spec.seed);
  }
  Vec l = spec.exponents_l.size() == spec.m ? Vec(spec.exponents_l)
                                            : Vec(Vec::Constant(spec.m, 4.0));
  if (spec.kind == "poisson") {
    if (spec.d != 1) throw config_error("poisson simulator is one-dimensional");
    ExactFn exact = [](const Vec& x) { return poisson_average(2.0 * x[0] - 1.0); };
    ErrorShapeFn shape = [](const Vec& x, const Vec& t) {
      constexpr double pi = 3.14159265358979323846;
      return std::sin(6.0 * pi * x[0]) * std::cos(3.0 * pi * t[0]);
    };
    return make_synthetic(std::move(exact), std::move(shape), spec.c, l, 1, spec.m);
  }
  if (spec.kind == "sine") {
    ExactFn exact = [](const Vec& x) {
      constexpr double pi = 3.14159265358979323846;
      double s = 0.0;
      for (int r = 0; r < x.size(); ++r) s += std::sin(2.0 * pi * x[r]);
      return s;
    };
    ErrorShapeFn shape = [](const Vec& x, const Vec& t) {
      constexpr double pi = 3.14159265358979323846;
      return std::cos(5.0 * pi * x[0] * (1.0 + t[0]));
    };
    return make_synthetic(std::move(exact), std::move(shape), spec.c, l, spec.d, spec.m);
  }
  throw config_error("unknown simulator kind: " + spec.kind);
}

Dataset evaluate_plan(const Simulator& sim, const DesignPlan& plan) {
  if (plan.n() == 0) throw config_error("evaluate_plan: empty design");
  if (plan.d() != sim.d() || plan.m() != sim.m())
    throw config_error("evaluate_plan: design does not match the simulator dimensions");
  Dataset data;
  data.X = plan.X;
  data.T = plan.T;
  data.y = Vec(plan.n());
  for (int i = 0; i < plan.n(); ++i) {
    try {
      data.y[i] = sim.eval(plan.X.row(i), plan.T.row(i));
    } catch (const std::exception& e) {
      std::string msg = "simulator failed at x = (";
      for (int r = 0; r < plan.d(); ++r)
        msg += (r ? ", " : "") + std::to_string(plan.X(i, r));
      msg += "), t = (";
      for (int j = 0; j < plan.m(); ++j)
        msg += (j ? ", " : "") + std::to_string(plan.T(i, j));
      msg += "): ";
      throw numerical_error(msg + e.what());
    }
  }
  data.validate();
  return data;
}

}  // namespace cfgp
