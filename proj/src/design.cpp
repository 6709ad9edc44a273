#include "cfgp/design.hpp"

#include "cfgp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cfgp {

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::MaxProLike: return "maxpro";
    case DesignKind::MMED: return "mmed";
    case DesignKind::Repetitive: return "repetitive";
    case DesignKind::Nested: return "nested";
    case DesignKind::CoupledNested: return "coupled_nested";
  }
  throw config_error("unknown design kind");
}

DesignKind design_kind_from_string(const std::string& name) {
  if (name == "maxpro") return DesignKind::MaxProLike;
  if (name == "mmed") return DesignKind::MMED;
  if (name == "repetitive") return DesignKind::Repetitive;
  if (name == "nested") return DesignKind::Nested;
  if (name == "coupled_nested") return DesignKind::CoupledNested;
  throw config_error("unknown design kind: " + name);
}

double maxpro_criterion(const Mat& X) {
  const int n = static_cast<int>(X.rows());
  const int dims = static_cast<int>(X.cols());
  double crit = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double p = 1.0;
      for (int r = 0; r < dims; ++r) {
        const double diff = X(i, r) - X(j, r);
        if (diff == 0.0) return std::numeric_limits<double>::infinity();
        p /= diff * diff;
      }
      crit += p;
    }
  }
  return crit;
}

namespace {

double pair_value(const Mat& X, int i, int j) {
  double p = 1.0;
  for (int r = 0; r < X.cols(); ++r) {
    const double diff = X(i, r) - X(j, r);
    p /= diff * diff;
  }
  return p;
}

// change in the criterion from swapping rows i and j in column r
double swap_delta(const Mat& X, const Mat& D, int i, int j, int r) {
  const double xi_new = X(j, r);
  const double xj_new = X(i, r);
  double delta = 0.0;
  for (int k = 0; k < X.rows(); ++k) {
    if (k == i || k == j) continue;
    const double di_old = X(i, r) - X(k, r);
    const double di_new = xi_new - X(k, r);
    delta += D(i, k) * (di_old * di_old / (di_new * di_new) - 1.0);
    const double dj_old = X(j, r) - X(k, r);
    const double dj_new = xj_new - X(k, r);
    delta += D(j, k) * (dj_old * dj_old / (dj_new * dj_new) - 1.0);
  }
  return delta;
}

void apply_swap(Mat& X, Mat& D, int i, int j, int r) {
  std::swap(X(i, r), X(j, r));
  for (int k = 0; k < X.rows(); ++k) {
    if (k == i || k == j) continue;
    D(i, k) = D(k, i) = pair_value(X, i, k);
    D(j, k) = D(k, j) = pair_value(X, j, k);
  }
}

double upper_sum(const Mat& D) {
  double s = 0.0;
  for (int i = 0; i < D.rows(); ++i)
    for (int j = i + 1; j < D.cols(); ++j) s += D(i, j);
  return s;
}

}  // namespace

Mat maxpro_lhs(int n, int dims, std::uint64_t seed) {
  if (n < 2) throw config_error("maxpro_lhs: need at least two points");
  if (dims < 1) throw config_error("maxpro_lhs: need at least one dimension");
  Rng rng(derive_seed(seed, 0x4C4853));
  Mat X(n, dims);
  for (int c = 0; c < dims; ++c) {
    std::vector<int> perm = rng.permutation(n);
    for (int i = 0; i < n; ++i) X(i, c) = (perm[i] + 0.5) / n;
  }
  Mat D = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) D(i, j) = D(j, i) = pair_value(X, i, j);
  double crit = upper_sum(D);

  // annealing over column swaps (these preserve the Latin structure)
  const int proposals = 10000;
  const double pair_scale = crit / (0.5 * n * (n - 1));
  double temp = 0.5 * pair_scale;
  const double rho = std::pow(1e-8, 1.0 / proposals);  // geometric cooling
  for (int p = 0; p < proposals; ++p, temp *= rho) {
    const int r = rng.uniform_int(dims);
    const int i = rng.uniform_int(n);
    int j = rng.uniform_int(n - 1);
    if (j >= i) ++j;
    const double delta = swap_delta(X, D, i, j, r);
    if (delta < 0.0 || rng.uniform() < std::exp(-delta / temp)) {
      apply_swap(X, D, i, j, r);
      crit += delta;
    }
  }
  crit = upper_sum(D);

  // exhaustive two-swap descent until a local optimum
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (int r = 0; r < dims; ++r) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double delta = swap_delta(X, D, i, j, r);
          if (delta < -1e-12 * (std::abs(crit) + 1.0)) {
            apply_swap(X, D, i, j, r);
            crit += delta;
            improved = true;
          }
        }
      }
    }
    crit = upper_sum(D);
    if (!improved) break;
  }
  return X;
}

DesignPlan generate_maxpro_like(int n, int d, std::uint64_t seed) {
  DesignPlan plan;
  plan.kind = DesignKind::MaxProLike;
  plan.X = maxpro_lhs(n, d, seed);
  plan.T = Mat(n, 0);
  return plan;
}

namespace {

void check_fidelity_box(const Vec& t_lo, const Vec& t_hi, int m) {
  if (t_lo.size() != m || t_hi.size() != m)
    throw config_error("fidelity box does not match fidelity dimension");
  for (int j = 0; j < m; ++j)
    if (!(t_lo[j] > 0.0) || !(t_hi[j] >= t_lo[j]))
      throw config_error("fidelity box requires 0 < t_lo <= t_hi");
}

double cost_exponent(const CostModel& cost, int j) {
  switch (cost.kind) {
    case CostModel::Kind::PowerSingle: return cost.c;
    case CostModel::Kind::ParamSingle: return cost.a1;
    case CostModel::Kind::ParamDouble: return j == 0 ? cost.a1 : cost.a2;
  }
  return 0.0;
}

// quantile of the density pi(t) proportional to 1/C(t) = t^e on [lo, hi]
double cost_weighted_quantile(double q, double lo, double hi, double e) {
  if (hi <= lo) return lo;
  const double k = e + 1.0;
  return std::pow((1.0 - q) * std::pow(lo, k) + q * std::pow(hi, k), 1.0 / k);
}

Mat mmed_fidelities(int n, int m, const CostModel& cost, const Vec& t_lo, const Vec& t_hi,
                    std::uint64_t seed) {
  Mat T(n, m);
  for (int j = 0; j < m; ++j) {
    const double e = cost_exponent(cost, j);
    std::vector<double> tv(n);
    for (int k = 0; k < n; ++k)
      tv[k] = cost_weighted_quantile((k + 0.5) / n, t_lo[j], t_hi[j], e);
    Rng rng(derive_seed(seed, 1000 + j));
    std::vector<int> perm = rng.permutation(n);
    for (int i = 0; i < n; ++i) T(i, j) = tv[perm[i]];
  }
  return T;
}

}  // namespace

DesignPlan generate_mmed(int n, int d, int m, const CostModel& cost, const Vec& t_lo,
                         const Vec& t_hi, std::uint64_t seed) {
  if (n < 2) throw config_error("generate_mmed: need at least two points");
  if (m < 1) throw config_error("generate_mmed: need a fidelity dimension");
  check_fidelity_box(t_lo, t_hi, m);
  cost.validate();
  if (cost.fidelity_dim() != m)
    throw config_error("generate_mmed: cost model fidelity dimension mismatch");
  DesignPlan plan;
  plan.kind = DesignKind::MMED;
  plan.X = maxpro_lhs(n, d, derive_seed(seed, 1));
  plan.T = mmed_fidelities(n, m, cost, t_lo, t_hi, seed);
  if (cost.is_constant())
    plan.notice = "constant cost model: fidelity weighting degenerates to even spacing";
  return plan;
}

Mat nested_levels(int L, const Vec& t_lo, const Vec& t_hi) {
  if (L < 1) throw config_error("nested_levels: need at least one level");
  check_fidelity_box(t_lo, t_hi, static_cast<int>(t_lo.size()));
  const int m = static_cast<int>(t_lo.size());
  Mat levels(L, m);
  for (int k = 0; k < L; ++k)
    for (int j = 0; j < m; ++j)
      levels(k, j) =
          L == 1 ? t_hi[j] : t_hi[j] - k * (t_hi[j] - t_lo[j]) / (L - 1.0);
  return levels;
}

namespace {

void validate_levels(const Mat& t_levels) {
  const int L = static_cast<int>(t_levels.rows());
  const int m = static_cast<int>(t_levels.cols());
  if (L < 1 || m < 1) throw config_error("nested: empty level table");
  for (int j = 0; j < m; ++j) {
    if (!(t_levels(L - 1, j) > 0.0))
      throw config_error("nested: fidelity levels must be positive");
    for (int k = 0; k + 1 < L; ++k)
      if (!(t_levels(k + 1, j) < t_levels(k, j)))
        throw config_error("nested: levels must be strictly decreasing (coarse to fine)");
    if (L > 2) {
      const double range = t_levels(0, j) - t_levels(L - 1, j);
      const double step = range / (L - 1.0);
      for (int k = 0; k + 1 < L; ++k) {
        const double gap = t_levels(k, j) - t_levels(k + 1, j);
        if (std::abs(gap - step) > 1e-9 * range + 1e-12)
          throw config_error("nested: levels must be evenly spaced");
      }
    }
  }
}

// index sets per level: keep every second entry of a seeded shuffle
std::vector<std::vector<int>> nested_index_sets(int n0, int L, std::uint64_t seed) {
  std::vector<std::vector<int>> sets(L);
  sets[0].resize(n0);
  for (int i = 0; i < n0; ++i) sets[0][i] = i;
  for (int k = 1; k < L; ++k) {
    const std::vector<int>& prev = sets[k - 1];
    Rng rng(derive_seed(seed, 100 + k));
    std::vector<int> perm = rng.permutation(static_cast<int>(prev.size()));
    for (std::size_t pos = 0; pos < perm.size(); pos += 2)
      sets[k].push_back(prev[perm[pos]]);
  }
  return sets;
}

DesignPlan assemble_nested(int n0, int L, const Mat& t_levels, int d, std::uint64_t seed,
                           DesignKind kind) {
  validate_levels(t_levels);
  if (L != t_levels.rows()) throw config_error("nested: level count mismatch");
  const double need = std::pow(2.0, L - 1);
  if (n0 < need)
    throw config_error("nested: n0 must be at least 2^(L-1) for the halvings");
  const int m = static_cast<int>(t_levels.cols());
  Mat X0 = maxpro_lhs(n0, d, derive_seed(seed, 1));
  std::vector<std::vector<int>> sets = nested_index_sets(n0, L, seed);
  int total = 0;
  for (const auto& s : sets) total += static_cast<int>(s.size());
  DesignPlan plan;
  plan.kind = kind;
  plan.X = Mat(total, d);
  plan.T = Mat(total, m);
  int row = 0;
  for (int k = 0; k < L; ++k) {
    for (int idx : sets[k]) {
      plan.X.row(row) = X0.row(idx);
      plan.T.row(row) = t_levels.row(k);
      ++row;
    }
  }
  return plan;
}

Mat ladder_fidelities(const Mat& t_levels, int s) {
  const int L = static_cast<int>(t_levels.rows());
  const int m = static_cast<int>(t_levels.cols());
  Mat ladder(s, m);
  for (int j = 0; j < m; ++j) {
    const double hi = t_levels(0, j);
    const double lo = t_levels(L - 1, j);
    const double mid = 0.5 * (lo + hi);
    for (int i = 0; i < s; ++i)
      ladder(i, j) = hi * std::pow(mid / hi, (2.0 * i + 1.0) / (2.0 * s));
  }
  return ladder;
}

}  // namespace

DesignPlan generate_nested(int n0, int L, const Mat& t_levels, int d, std::uint64_t seed) {
  return assemble_nested(n0, L, t_levels, d, seed, DesignKind::Nested);
}

DesignPlan generate_coupled_nested(int n0, int L, const Mat& t_levels, int d,
                                   int stack_size, std::uint64_t seed) {
  if (stack_size < 2) throw config_error("coupled nested: stack size must be >= 2");
  DesignPlan plan = assemble_nested(n0, L, t_levels, d, seed, DesignKind::CoupledNested);
  const int m = static_cast<int>(t_levels.cols());
  // stack at the first location retained to the finest level
  std::vector<std::vector<int>> sets = nested_index_sets(n0, L, seed);
  const int stack_idx = sets[L - 1].front();
  Mat X0 = maxpro_lhs(n0, d, derive_seed(seed, 1));
  const Vec x_stack = X0.row(stack_idx);

  Mat ladder = ladder_fidelities(t_levels, stack_size);
  // nudge any ladder row that collides with a level value at this location
  for (int i = 0; i < stack_size; ++i) {
    for (int guard = 0; guard < 100; ++guard) {
      bool collide = false;
      for (int k = 0; k < L && !collide; ++k)
        collide = (ladder.row(i) - t_levels.row(k)).cwiseAbs().maxCoeff() <=
                  1e-12 * t_levels.row(0).maxCoeff();
      if (!collide) break;
      ladder.row(i) *= 1.0 + 1e-6;
    }
  }

  const int n_old = plan.n();
  Mat X(n_old + stack_size, d);
  Mat T(n_old + stack_size, m);
  X.topRows(n_old) = plan.X;
  T.topRows(n_old) = plan.T;
  for (int i = 0; i < stack_size; ++i) {
    X.row(n_old + i) = x_stack.transpose();
    T.row(n_old + i) = ladder.row(i);
  }
  plan.X = std::move(X);
  plan.T = std::move(T);
  return plan;
}

DesignPlan generate_repetitive(int n_loc, int reps_per_loc, int d, int m, const Vec& t_lo,
                               const Vec& t_hi, std::uint64_t seed) {
  if (n_loc < 2) throw config_error("repetitive: need at least two locations");
  if (reps_per_loc < 2) throw config_error("repetitive: need at least two repetitions");
  check_fidelity_box(t_lo, t_hi, m);
  Mat pattern(reps_per_loc, m);
  if (m == 1) {
    for (int k = 0; k < reps_per_loc; ++k)
      pattern(k, 0) = t_lo[0] + (t_hi[0] - t_lo[0]) * (k + 0.5) / reps_per_loc;
  } else {
    Mat Z = maxpro_lhs(reps_per_loc, m, derive_seed(seed, 2));
    for (int k = 0; k < reps_per_loc; ++k)
      for (int j = 0; j < m; ++j)
        pattern(k, j) = t_lo[j] + (t_hi[j] - t_lo[j]) * Z(k, j);
  }
  Mat X0 = maxpro_lhs(n_loc, d, derive_seed(seed, 1));
  DesignPlan plan;
  plan.kind = DesignKind::Repetitive;
  plan.X = Mat(n_loc * reps_per_loc, d);
  plan.T = Mat(n_loc * reps_per_loc, m);
  int row = 0;
  for (int i = 0; i < n_loc; ++i) {
    for (int k = 0; k < reps_per_loc; ++k) {
      plan.X.row(row) = X0.row(i);
      plan.T.row(row) = pattern.row(k);
      ++row;
    }
  }
  return plan;
}

double plan_cost(const DesignPlan& plan, const CostModel& cost) {
  if (plan.m() != cost.fidelity_dim())
    throw config_error("plan_cost: plan has no matching fidelity columns");
  double total = 0.0;
  for (int i = 0; i < plan.n(); ++i) total += cost.eval(plan.T.row(i));
  return total;
}

namespace {

Mat midpoint_fidelities(int n, int m, const Vec& t_lo, const Vec& t_hi,
                        std::uint64_t seed) {
  Mat Z = maxpro_lhs(n, m, derive_seed(seed, 3));
  Mat T(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) T(i, j) = t_lo[j] + (t_hi[j] - t_lo[j]) * Z(i, j);
  return T;
}

// cost of a MaxPro-like plan of size n without generating it (m == 1: the
// fidelity column is a permutation of mapped midpoints, cost is order-free)
double maxpro_cost_m1(int n, const CostModel& cost, double lo, double hi) {
  double total = 0.0;
  Vec t(1);
  for (int k = 0; k < n; ++k) {
    t[0] = lo + (hi - lo) * (k + 0.5) / n;
    total += cost.eval(t);
  }
  return total;
}

double mmed_cost(int n, int m, const CostModel& cost, const Vec& t_lo, const Vec& t_hi,
                 std::uint64_t seed) {
  Mat T = mmed_fidelities(n, m, cost, t_lo, t_hi, seed);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost.eval(T.row(i));
  return total;
}

std::vector<int> nested_sizes(int n0, int L) {
  std::vector<int> sizes{n0};
  for (int k = 1; k < L; ++k) sizes.push_back((sizes.back() + 1) / 2);
  return sizes;
}

double nested_cost(int n0, int L, const Mat& t_levels, const CostModel& cost,
                   bool coupled, int stack_size) {
  const std::vector<int> sizes = nested_sizes(n0, L);
  double total = 0.0;
  for (int k = 0; k < L; ++k) total += sizes[k] * cost.eval(t_levels.row(k));
  if (coupled) {
    Mat ladder = ladder_fidelities(t_levels, stack_size);
    for (int i = 0; i < stack_size; ++i) total += cost.eval(ladder.row(i));
  }
  return total;
}

void append_point(DesignPlan& plan, const Vec& x, const Vec& t) {
  Mat X(plan.n() + 1, plan.d());
  Mat T(plan.n() + 1, plan.m());
  X.topRows(plan.n()) = plan.X;
  T.topRows(plan.n()) = plan.T;
  X.row(plan.n()) = x.transpose();
  T.row(plan.n()) = t.transpose();
  plan.X = std::move(X);
  plan.T = std::move(T);
}

// greedy fill with the cheapest admissible point (t_cheap) and fresh
// low-discrepancy locations until the leftover is below one such point
void top_up(DesignPlan& plan, const CostModel& cost, const Vec& t_cheap, double budget,
            std::uint64_t seed) {
  const double unit = cost.eval(t_cheap);
  double total = plan_cost(plan, cost);
  Halton halton(plan.d(), derive_seed(seed, 0xF111));
  int idx = 0;
  while (budget - total >= unit * (1.0 - 1e-12)) {
    append_point(plan, halton.point(idx++), t_cheap);
    total += unit;
  }
}

}  // namespace

DesignPlan generate_design(const DesignRequest& req, const CostModel& cost) {
  if (req.d < 1 || req.m < 1) throw config_error("generate_design: need d >= 1, m >= 1");
  check_fidelity_box(req.t_lo, req.t_hi, req.m);
  cost.validate();
  if (cost.fidelity_dim() != req.m)
    throw config_error("generate_design: cost model fidelity dimension mismatch");

  const bool budgeted = req.budget > 0.0;
  DesignPlan plan;
  switch (req.kind) {
    case DesignKind::MaxProLike: {
      int n = req.n;
      if (budgeted) {
        if (req.m == 1) {
          n = 0;
          while (maxpro_cost_m1(n + 1, cost, req.t_lo[0], req.t_hi[0]) <=
                     req.budget * (1.0 + 1e-12) &&
                 n < 1000000)
            ++n;
        } else {
          // no order-free cost formula: grow until the measured cost exceeds
          n = 2;
          while (n < 100000) {
            Mat T = midpoint_fidelities(n + 1, req.m, req.t_lo, req.t_hi, req.seed);
            double c = 0.0;
            for (int i = 0; i <= n; ++i) c += cost.eval(T.row(i));
            if (c > req.budget * (1.0 + 1e-12)) break;
            ++n;
          }
        }
        if (n < 2) throw config_error("generate_design: budget below two-point cost");
      }
      Mat Z = maxpro_lhs(n, req.d + req.m, req.seed);
      plan.kind = DesignKind::MaxProLike;
      plan.X = Z.leftCols(req.d);
      plan.T = Mat(n, req.m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < req.m; ++j)
          plan.T(i, j) = req.t_lo[j] + (req.t_hi[j] - req.t_lo[j]) * Z(i, req.d + j);
      break;
    }
    case DesignKind::MMED: {
      int n = req.n;
      if (budgeted) {
        n = 0;
        while (mmed_cost(n + 1, req.m, cost, req.t_lo, req.t_hi, req.seed) <=
                   req.budget * (1.0 + 1e-12) &&
               n < 1000000)
          ++n;
        if (n < 2) throw config_error("generate_design: budget below two-point cost");
      }
      plan = generate_mmed(n, req.d, req.m, cost, req.t_lo, req.t_hi, req.seed);
      break;
    }
    case DesignKind::Nested:
    case DesignKind::CoupledNested: {
      const bool coupled = req.kind == DesignKind::CoupledNested;
      const Mat levels = nested_levels(req.levels, req.t_lo, req.t_hi);
      int n0 = req.n0;
      if (budgeted) {
        const int n_min = static_cast<int>(std::pow(2.0, req.levels - 1));
        n0 = 0;
        while (nested_cost(std::max(n_min, n0 + 1), req.levels, levels, cost, coupled,
                           req.stack_size) <= req.budget * (1.0 + 1e-12) &&
               n0 < 1000000)
          n0 = std::max(n_min, n0 + 1);
        if (n0 < n_min)
          throw config_error("generate_design: budget below the minimal nested design");
      }
      plan = coupled ? generate_coupled_nested(n0, req.levels, levels, req.d,
                                               req.stack_size, req.seed)
                     : generate_nested(n0, req.levels, levels, req.d, req.seed);
      break;
    }
    case DesignKind::Repetitive: {
      int n_loc = req.n_loc;
      DesignPlan proto = generate_repetitive(2, req.reps_per_loc, req.d, req.m, req.t_lo,
                                             req.t_hi, req.seed);
      // pattern cost per location from the prototype's first block
      double per_loc = 0.0;
      std::vector<double> point_costs(req.reps_per_loc);
      for (int k = 0; k < req.reps_per_loc; ++k) {
        point_costs[k] = cost.eval(proto.T.row(k));
        per_loc += point_costs[k];
      }
      int partial = 0;
      if (budgeted) {
        n_loc = static_cast<int>(req.budget * (1.0 + 1e-12) / per_loc);
        double rem = req.budget - n_loc * per_loc;
        // cheapest-first partial pattern at one extra location
        std::vector<int> order(req.reps_per_loc);
        for (int k = 0; k < req.reps_per_loc; ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
          return point_costs[a] < point_costs[b];
        });
        for (int k : order) {
          if (rem >= point_costs[k] * (1.0 - 1e-12)) {
            ++partial;
            rem -= point_costs[k];
          } else {
            break;
          }
        }
        if (n_loc < 2) throw config_error("generate_design: budget below two locations");
      }
      plan = generate_repetitive(n_loc + (partial > 0 ? 1 : 0), req.reps_per_loc, req.d,
                                 req.m, req.t_lo, req.t_hi, req.seed);
      if (partial > 0) {
        // drop the most expensive unaffordable rows of the last location
        std::vector<int> order(req.reps_per_loc);
        for (int k = 0; k < req.reps_per_loc; ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
          return point_costs[a] < point_costs[b];
        });
        std::vector<int> keep;
        for (int i = 0; i < n_loc * req.reps_per_loc; ++i) keep.push_back(i);
        for (int r = 0; r < partial; ++r)
          keep.push_back(n_loc * req.reps_per_loc + order[r]);
        std::sort(keep.begin(), keep.end());
        Mat X(static_cast<int>(keep.size()), req.d);
        Mat T(static_cast<int>(keep.size()), req.m);
        for (std::size_t i = 0; i < keep.size(); ++i) {
          X.row(static_cast<int>(i)) = plan.X.row(keep[i]);
          T.row(static_cast<int>(i)) = plan.T.row(keep[i]);
        }
        plan.X = std::move(X);
        plan.T = std::move(T);
      }
      break;
    }
  }

  if (budgeted && req.kind != DesignKind::Repetitive) {
    // append coarsest-fidelity points while one still fits
    Vec t_cheap = req.kind == DesignKind::Nested || req.kind == DesignKind::CoupledNested
                      ? Vec(nested_levels(req.levels, req.t_lo, req.t_hi).row(0))
                      : Vec(req.t_hi);
    top_up(plan, cost, t_cheap, req.budget, req.seed);
  }
  plan.total_cost = plan_cost(plan, cost);
  if (budgeted && plan.total_cost > req.budget * (1.0 + 1e-9))
    throw numerical_error("generate_design: budget overshoot (internal)");
  return plan;
}

}  // namespace cfgp
