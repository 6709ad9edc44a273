#pragma once

#include "cfgp/design.hpp"
#include "cfgp/imspe.hpp"
#include "cfgp/inference.hpp"
#include "cfgp/simulate.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cfgp {

double rmse(const Vec& predictions, const Vec& truths);

struct ALConfig {
  double total_budget = 0.0;
  /// Either a pre-evaluated dataset or a design request whose budget share
  /// (initial_budget) is spent up front.
  std::optional<Dataset> initial_data;
  DesignRequest initial;
  double initial_budget = -1.0;

  int refit_every = 1;
  Vec t_lo;
  Vec t_hi;
  std::uint64_t seed = 1;
  TrendBasis basis;
  FitConfig fit;
  CriterionOptions criterion;  // fidelity bounds are overridden per iteration
  /// Optional held-out input grid; RMSE against the simulator's exact
  /// surface at t = 0 is recorded per iteration when nonempty.
  Mat eval_grid;
};

struct ALRecord {
  int iteration = 0;
  Vec x;
  Vec t;
  double criterion_value = 0.0;  // reduction / cost at the chosen point
  double reduction = 0.0;
  double cost = 0.0;
  double cum_cost = 0.0;         // acquisition spend, excluding the initial design
  bool refitted = false;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  HyperParams hp;
};

using TraceCallback = std::function<void(const ALRecord&)>;

struct ALResult {
  Dataset data;
  FitReport fit;
  std::optional<FittedModel> model;
  std::vector<ALRecord> trace;
  std::string stop_reason;
  double initial_cost = 0.0;
  double acquired_cost = 0.0;   // exact sum of acquisition costs
  double final_rmse = std::numeric_limits<double>::quiet_NaN();
};

/// The sequential loop: fit, maximize reduction-per-cost over the feasible
/// box, evaluate, append, refit on the configured cadence, stop when no
/// affordable candidate remains.  Acquisition spend never exceeds
/// total_budget - initial cost.
ALResult run_al(const ALConfig& config, const Simulator& sim, const CostModel& cost,
                const TraceCallback& on_record = {});

/// Evaluate the whole design up front and fit once.
ALResult run_one_shot(const DesignPlan& plan, const Simulator& sim,
                      const TrendBasis& basis, const FitConfig& fit,
                      const Mat& eval_grid = Mat());

/// Single-fidelity baseline: n space-filling locations, all at t_fixed.
ALResult run_single_fidelity(const Vec& t_fixed, int n, const Simulator& sim,
                             const TrendBasis& basis, const FitConfig& fit,
                             std::uint64_t seed, const Mat& eval_grid = Mat());

/// Solve C(t) = per_point_budget for a scalar fidelity by bisection
/// (single-coordinate cost forms only).
double invert_cost(const CostModel& cost, double per_point_cost);

}  // namespace cfgp
