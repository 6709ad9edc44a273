#pragma once

#include "cfgp/cost.hpp"
#include "cfgp/gp.hpp"
#include "cfgp/integrals.hpp"

#include <optional>

namespace cfgp {

struct ImspeOptions {
  /// Absolute diagonal shift added to the unit-variance covariance before
  /// factoring.  When unset the usual escalating jitter is applied; setting
  /// it lets two states over nested datasets share one shift exactly.
  std::optional<double> jitter_abs;
};

/// Closed-form integrated mean-squared prediction error over the unit cube
/// on the zero-fidelity surface, split into its trace components:
///   I_n = E - tr(K^-1 W) + tr(M W) + tr(P^-1 G) - 2 tr(P^-1 F' K^-1 H)
/// with K the full covariance, M = K^-1 F P^-1 F' K^-1 and P = F' K^-1 F.
struct ImspeComponents {
  double value = 0.0;
  double E = 0.0;
  double tr_kinv_w = 0.0;
  double tr_m_w = 0.0;
  double tr_pinv_g = 0.0;
  double tr_pgls_h = 0.0;
  double jitter_abs = 0.0;
};

ImspeComponents imspe_closed(const Dataset& data, const TrendBasis& basis,
                             const CombinedCovSpec& spec, const ImspeOptions& opts = {});

/// Cached decomposition of a fitted design that prices one-point extensions
/// in O(n^2) each via a rank-one update of the closed form.
class ImspeState {
 public:
  ImspeState(const Dataset& data, const TrendBasis& basis, const CombinedCovSpec& spec,
             const ImspeOptions& opts = {});

  /// Current closed-form IMSPE of the held design.
  double imspe() const { return imspe_; }
  double jitter_abs() const { return jitter_abs_; }
  double sigma2() const { return spec_.sigma2; }
  int n() const { return data_.n(); }

  /// IMSPE reduction I_n - I_{n+1} from appending the point (x*, t*).
  /// Returns -infinity when the candidate is numerically indistinguishable
  /// from the held design (conditional variance below 1e-10 sigma^2).
  double reduction(const Vec& xstar, const Vec& tstar) const;

  const Dataset& data() const { return data_; }
  const TrendBasis& basis() const { return basis_; }
  const CombinedCovSpec& spec() const { return spec_; }

 private:
  Dataset data_;
  TrendBasis basis_;
  CombinedCovSpec spec_;
  double jitter_abs_ = 0.0;
  double imspe_ = 0.0;
  Mat kinv_;   // inverse of the full covariance sigma2 (K0 + jitter I)
  Mat F_;
  Mat J_;      // K^-1 F
  Mat psi_;    // (F' K^-1 F)^-1
  Mat W_;
  Mat H_;
  Mat G_;
  Mat C_;      // J' H
};

struct CriterionOptions {
  int n_probes = 32;       // low-discrepancy candidates scored directly
  int n_starts = 8;        // best probes polished with the bounded optimizer
  int max_iters = 40;
  double fd_step_frac = 1e-6;  // finite-difference step as a fraction of box width
  std::uint64_t seed = 1;
  Vec t_lo;                // lower fidelity bounds, strictly positive
  Vec t_hi;
};

struct CriterionResult {
  bool found = false;
  Vec x;
  Vec t;
  double reduction = 0.0;
  double cost = 0.0;
  double value = -std::numeric_limits<double>::infinity();  // reduction / cost
};

/// Maximize reduction-per-cost over [0,1]^d x [t_lo, t_hi].  Probe points
/// come from a seeded low-discrepancy sequence; the best few are polished
/// with projected quasi-Newton steps on finite-difference gradients.
/// found == false means every probe was degenerate (no admissible point).
CriterionResult optimize_criterion(const ImspeState& state, const CostModel& cost,
                                   const CriterionOptions& opts);

}  // namespace cfgp
