#pragma once

#include "cfgp/cost.hpp"
#include "cfgp/types.hpp"

#include <string>

namespace cfgp {

enum class DesignKind { MaxProLike, MMED, Repetitive, Nested, CoupledNested };

std::string to_string(DesignKind kind);
DesignKind design_kind_from_string(const std::string& name);

struct DesignPlan {
  DesignKind kind = DesignKind::MaxProLike;
  Mat X;  // n x d, inside the unit cube
  Mat T;  // n x m fidelities (zero columns when the plan is input-only)
  double total_cost = std::numeric_limits<double>::quiet_NaN();
  std::string notice;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
  int m() const { return static_cast<int>(T.cols()); }
};

/// Maximum-projection criterion sum_{i<j} prod_r (x_ir - x_jr)^-2.
double maxpro_criterion(const Mat& X);

/// Midpoint Latin hypercube in [0,1]^dims optimized for the criterion by
/// column-swap simulated annealing followed by an exhaustive two-swap
/// polish.  Column swaps preserve the Latin property, so every column stays
/// a permutation of the cell midpoints.
Mat maxpro_lhs(int n, int dims, std::uint64_t seed);

/// Space-filling input locations only (no fidelity columns).
DesignPlan generate_maxpro_like(int n, int d, std::uint64_t seed);

/// Space-filling inputs with fidelities set at cost-weighted quantiles of
/// the density pi(t) proportional to 1/C(t) on [t_lo, t_hi], matched to the
/// inputs by a seeded permutation per fidelity coordinate.  A constant cost
/// degrades to plain even spacing and records a notice.
DesignPlan generate_mmed(int n, int d, int m, const CostModel& cost, const Vec& t_lo,
                         const Vec& t_hi, std::uint64_t seed);

/// Evenly spaced fidelity levels, coarsest (largest t) first.  L x m.
Mat nested_levels(int L, const Vec& t_lo, const Vec& t_hi);

/// Level 1: n0 space-filling locations at the coarsest fidelity; each next
/// level keeps every second location of a seeded shuffle of the previous
/// level at the next finer fidelity.
DesignPlan generate_nested(int n0, int L, const Mat& t_levels, int d, std::uint64_t seed);

/// Nested plus stack_size extra points stacked at one location retained to
/// the finest level, with a geometric fidelity ladder over the upper
/// (coarse) half of the fidelity range.
DesignPlan generate_coupled_nested(int n0, int L, const Mat& t_levels, int d,
                                   int stack_size, std::uint64_t seed);

/// n_loc space-filling locations, each evaluated at the same reps_per_loc
/// space-filling fidelity pattern over [t_lo, t_hi].
DesignPlan generate_repetitive(int n_loc, int reps_per_loc, int d, int m, const Vec& t_lo,
                               const Vec& t_hi, std::uint64_t seed);

double plan_cost(const DesignPlan& plan, const CostModel& cost);

/// One entry point for budget-matched generation.  When budget > 0 the
/// generator picks the largest size whose cost fits and then greedily
/// appends the cheapest admissible points, so the realized cost lands
/// within one such point of the budget.
struct DesignRequest {
  DesignKind kind = DesignKind::MMED;
  int d = 1;
  int m = 1;
  Vec t_lo;
  Vec t_hi;
  std::uint64_t seed = 1;
  double budget = -1.0;  // > 0 enables budget-matched sizing
  int n = 16;            // MaxProLike / MMED size when budget is off
  int levels = 3;        // Nested / CoupledNested
  int n0 = 8;            // Nested / CoupledNested base size when budget is off
  int stack_size = 4;    // CoupledNested
  int reps_per_loc = 4;  // Repetitive
  int n_loc = 4;         // Repetitive location count when budget is off
};

DesignPlan generate_design(const DesignRequest& req, const CostModel& cost);

}  // namespace cfgp
