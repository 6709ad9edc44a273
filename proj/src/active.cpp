#include "cfgp/active.hpp"

#include "cfgp/rng.hpp"

#include <cmath>

namespace cfgp {

double rmse(const Vec& predictions, const Vec& truths) {
  if (predictions.size() != truths.size())
    throw config_error("rmse: length mismatch");
  if (predictions.size() < 1) throw config_error("rmse: empty inputs");
  return std::sqrt((predictions - truths).squaredNorm() / predictions.size());
}

double invert_cost(const CostModel& cost, double per_point_cost) {
  cost.validate();
  if (cost.fidelity_dim() != 1)
    throw config_error("invert_cost: single-fidelity cost forms only");
  if (cost.is_constant()) throw config_error("invert_cost: constant cost is not invertible");
  if (!(per_point_cost > 0.0)) throw config_error("invert_cost: target must be positive");
  auto C = [&](double t) {
    Vec tv(1);
    tv[0] = t;
    return cost.eval(tv);
  };
  double lo = 1.0, hi = 1.0;
  for (int i = 0; i < 200 && C(lo) < per_point_cost; ++i) lo *= 0.5;
  for (int i = 0; i < 200 && C(hi) > per_point_cost; ++i) hi *= 2.0;
  if (C(lo) < per_point_cost || C(hi) > per_point_cost)
    throw numerical_error("invert_cost: target outside the reachable range");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (C(mid) > per_point_cost)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

namespace {

double dataset_cost(const Dataset& data, const CostModel& cost) {
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) total += cost.eval(data.T.row(i));
  return total;
}

// smallest diagonal corner t_c on [t_lo, t_hi] with C(t_c) <= remaining;
// every t in [t_c, t_hi] then costs at most C(t_c)
bool affordable_corner(const CostModel& cost, const Vec& t_lo, const Vec& t_hi,
                       double remaining, Vec& corner) {
  if (!(cost.eval(t_hi) <= remaining)) return false;
  double lam_lo = 0.0, lam_hi = 1.0;
  if (cost.eval(t_lo) <= remaining) {
    corner = t_lo;
    return true;
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lam_lo + lam_hi);
    Vec t = t_lo + mid * (t_hi - t_lo);
    if (cost.eval(t) <= remaining)
      lam_hi = mid;
    else
      lam_lo = mid;
  }
  corner = t_lo + lam_hi * (t_hi - t_lo);
  return cost.eval(corner) <= remaining;
}

double eval_with_context(const Simulator& sim, const Vec& x, const Vec& t) {
  try {
    return sim.eval(x, t);
  } catch (const std::exception& e) {
    std::string msg = "simulator failed at x = (";
    for (int r = 0; r < x.size(); ++r) msg += (r ? ", " : "") + std::to_string(x[r]);
    msg += "), t = (";
    for (int j = 0; j < t.size(); ++j) msg += (j ? ", " : "") + std::to_string(t[j]);
    throw numerical_error(msg + "): " + e.what());
  }
}

double grid_rmse(const FittedModel& model, const Simulator& sim, const Mat& grid) {
  const int ng = static_cast<int>(grid.rows());
  Vec pred(ng), truth(ng);
  const Vec t0 = Vec::Zero(sim.m());
  for (int i = 0; i < ng; ++i) {
    double mean = 0.0, var = 0.0;
    model.posterior(grid.row(i), t0, mean, var);
    pred[i] = mean;
    truth[i] = sim.exact(grid.row(i));
  }
  return rmse(pred, truth);
}

}  // namespace

ALResult run_al(const ALConfig& config, const Simulator& sim, const CostModel& cost,
                const TraceCallback& on_record) {
  cost.validate();
  if (!(config.total_budget > 0.0)) throw config_error("run_al: budget must be positive");
  const int m = sim.m();
  if (config.t_lo.size() != m || config.t_hi.size() != m)
    throw config_error("run_al: fidelity box does not match the simulator");
  for (int j = 0; j < m; ++j)
    if (!(config.t_lo[j] > 0.0) || !(config.t_hi[j] >= config.t_lo[j]))
      throw config_error("run_al: need 0 < t_min <= t_max");
  if (config.refit_every < 1) throw config_error("run_al: refit_every must be >= 1");

  ALResult res;
  if (config.initial_data) {
    res.data = *config.initial_data;
    res.data.validate();
    res.initial_cost = dataset_cost(res.data, cost);
  } else {
    DesignRequest req = config.initial;
    req.d = sim.d();
    req.m = m;
    req.t_lo = config.t_lo;
    req.t_hi = config.t_hi;
    req.seed = derive_seed(config.seed, 1);
    if (config.initial_budget > 0.0) req.budget = config.initial_budget;
    DesignPlan plan = generate_design(req, cost);
    res.data = evaluate_plan(sim, plan);
    res.initial_cost = plan.total_cost;
  }
  if (res.initial_cost > config.total_budget * (1.0 + 1e-12))
    throw config_error("run_al: initial design exceeds the total budget");

  const double acq_budget = config.total_budget - res.initial_cost;
  const double cheapest = cost.eval(config.t_hi);

  FitConfig fitcfg = config.fit;
  res.fit = fit_mle(res.data, config.basis, fitcfg);

  double spent = 0.0;
  int since_refit = 0;
  int iter = 0;
  while (true) {
    if (spent + cheapest > acq_budget) {
      res.stop_reason = "budget_exhausted";
      break;
    }
    ImspeState state(res.data, config.basis, res.fit.best.spec);
    CriterionOptions copt = config.criterion;
    copt.t_lo = config.t_lo;
    copt.t_hi = config.t_hi;
    copt.seed = derive_seed(config.seed, 100 + iter);
    CriterionResult cr = optimize_criterion(state, cost, copt);
    if (!cr.found) {
      res.stop_reason = "degenerate_criterion";
      break;
    }
    const double remaining = acq_budget - spent;
    if (!(cr.cost <= remaining)) {
      // proposal unaffordable: retry over the affordable fidelity sub-box
      Vec corner;
      if (!affordable_corner(cost, config.t_lo, config.t_hi, remaining, corner)) {
        res.stop_reason = "no_affordable_fidelity";
        break;
      }
      copt.t_lo = corner;
      copt.seed = derive_seed(config.seed, 100000 + iter);
      cr = optimize_criterion(state, cost, copt);
      if (!cr.found) {
        res.stop_reason = "degenerate_criterion";
        break;
      }
      if (!(spent + cr.cost <= acq_budget)) {
        res.stop_reason = "budget_exhausted";
        break;
      }
    }
    if (!(spent + cr.cost <= acq_budget)) {
      res.stop_reason = "budget_exhausted";
      break;
    }

    const double y = eval_with_context(sim, cr.x, cr.t);
    res.data = res.data.with_row_appended(cr.x, cr.t, y);
    spent += cr.cost;
    ++iter;
    ++since_refit;

    ALRecord rec;
    rec.iteration = iter;
    rec.x = cr.x;
    rec.t = cr.t;
    rec.criterion_value = cr.value;
    rec.reduction = cr.reduction;
    rec.cost = cr.cost;
    rec.cum_cost = spent;
    rec.refitted = since_refit >= config.refit_every;
    if (rec.refitted) {
      fitcfg.extra_starts = {res.fit.best.spec};  // warm start at the previous optimum
      res.fit = fit_mle(res.data, config.basis, fitcfg);
      since_refit = 0;
      rec.loglik = res.fit.loglik;
    } else {
      LikelihoodEvaluator ev(res.data, config.basis);
      rec.loglik = ev.value(res.fit.best.spec);
    }
    rec.hp = res.fit.best;
    if (config.eval_grid.rows() > 0) {
      FittedModel snapshot(res.data, config.basis, res.fit.best.spec);
      rec.rmse = grid_rmse(snapshot, sim, config.eval_grid);
    }
    res.trace.push_back(rec);
    if (on_record) on_record(rec);
  }

  if (since_refit > 0) {
    fitcfg.extra_starts = {res.fit.best.spec};
    res.fit = fit_mle(res.data, config.basis, fitcfg);
  }
  res.model.emplace(res.data, config.basis, res.fit.best.spec);
  res.acquired_cost = spent;
  if (config.eval_grid.rows() > 0) res.final_rmse = grid_rmse(*res.model, sim, config.eval_grid);
  return res;
}

ALResult run_one_shot(const DesignPlan& plan, const Simulator& sim, const TrendBasis& basis,
                      const FitConfig& fit, const Mat& eval_grid) {
  ALResult res;
  res.data = evaluate_plan(sim, plan);
  res.fit = fit_mle(res.data, basis, fit);
  res.model.emplace(res.data, basis, res.fit.best.spec);
  res.stop_reason = "one_shot";
  if (eval_grid.rows() > 0) res.final_rmse = grid_rmse(*res.model, sim, eval_grid);
  return res;
}

ALResult run_single_fidelity(const Vec& t_fixed, int n, const Simulator& sim,
                             const TrendBasis& basis, const FitConfig& fit,
                             std::uint64_t seed, const Mat& eval_grid) {
  if (n < 1) throw config_error("run_single_fidelity: need at least one point");
  if (t_fixed.size() != sim.m())
    throw config_error("run_single_fidelity: fidelity dimension mismatch");
  for (int j = 0; j < t_fixed.size(); ++j)
    if (!(t_fixed[j] > 0.0))
      throw config_error("run_single_fidelity: fidelity must be positive");
  DesignPlan plan;
  plan.kind = DesignKind::MaxProLike;
  plan.X = maxpro_lhs(n, sim.d(), derive_seed(seed, 0x5F));
  plan.T = t_fixed.transpose().replicate(n, 1);
  ALResult res = run_one_shot(plan, sim, basis, fit, eval_grid);
  res.stop_reason = "single_fidelity";
  return res;
}

}  // namespace cfgp
