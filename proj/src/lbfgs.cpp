#include "cfgp/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace cfgp {

namespace {

Vec project(const Vec& x, const Vec& lo, const Vec& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const Vec& x0, const Vec& lo,
                           const Vec& hi, const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (lo.size() != n || hi.size() != n || ((hi - lo).array() < 0.0).any())
    throw std::invalid_argument("lbfgs: inconsistent bounds");

  LbfgsResult res;
  res.x = project(x0, lo, hi);
  res.grad.resize(n);
  res.f = objective(res.x, res.grad);
  if (!std::isfinite(res.f)) return res;  // caller treats as failed start

  struct Pair { Vec s, y; double rho; };
  std::deque<Pair> hist;

  for (res.iters = 0; res.iters < opts.max_iters; ++res.iters) {
    // Projected-gradient stationarity measure.
    const Vec pg = res.x - project(res.x - res.grad, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      return res;
    }

    // Two-loop recursion.
    Vec d = -res.grad;
    std::vector<double> alpha(hist.size());
    for (int k = static_cast<int>(hist.size()) - 1; k >= 0; --k) {
      alpha[k] = hist[k].rho * hist[k].s.dot(d);
      d -= alpha[k] * hist[k].y;
    }
    if (!hist.empty()) {
      const Pair& last = hist.back();
      const double yy = last.y.squaredNorm();
      if (yy > 0.0) d *= last.s.dot(last.y) / yy;
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double beta = hist[k].rho * hist[k].y.dot(d);
      d += (alpha[k] - beta) * hist[k].s;
    }
    if (!d.allFinite() || d.dot(res.grad) > -1e-12 * d.norm() * res.grad.norm()) {
      hist.clear();
      d = -res.grad;
    }

    // Backtracking Armijo search along the projected path.
    double step = 1.0;
    Vec x_new;
    Vec g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      x_new = project(res.x + step * d, lo, hi);
      const Vec dx = x_new - res.x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= res.f + opts.armijo_c1 * res.grad.dot(dx)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.line_search_failed = true;
      return res;
    }

    Pair pr;
    pr.s = x_new - res.x;
    pr.y = g_new - res.grad;
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-10 * pr.s.norm() * pr.y.norm()) {
      pr.rho = 1.0 / sy;
      hist.push_back(std::move(pr));
      if (static_cast<int>(hist.size()) > opts.history) hist.pop_front();
    }
    res.x = std::move(x_new);
    res.f = f_new;
    res.grad = std::move(g_new);
  }
  return res;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& step) {
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = step[i];
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace cfgp
