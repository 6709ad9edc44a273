#pragma once

#include "cfgp/types.hpp"

#include <functional>

namespace cfgp {

/// Box-constrained limited-memory quasi-Newton minimizer: L-BFGS two-loop
/// directions, gradient-projection onto the box, and a backtracking
/// Armijo-type line search along the projected path.  Deterministic; no
/// internal randomness.
struct LbfgsOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;   // infinity norm of the projected gradient step
  int history = 8;
  double armijo_c1 = 1e-4;
  int max_backtracks = 40;
};

struct LbfgsResult {
  Vec x;
  double f = std::numeric_limits<double>::infinity();
  Vec grad;
  int iters = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Objective contract: fills grad (same size as x) and returns f(x).  May
/// return +inf to reject a point; the line search backs off.
using Objective = std::function<double(const Vec& x, Vec& grad)>;

LbfgsResult lbfgs_minimize(const Objective& objective, const Vec& x0, const Vec& lo,
                           const Vec& hi, const LbfgsOptions& opts);

/// Central finite-difference gradient helper for objectives without analytic
/// gradients.  step is absolute, per coordinate.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& step);

}  // namespace cfgp
