#pragma once

#include "cfgp/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cfgp {

/// Adaptive Gauss-Kronrod quadrature to ~1e-12 tolerance; the independent
/// oracle the closed-form integrals are validated against.
double quad_integrate(const std::function<double(double)>& f, double lo, double hi);

struct CheckRow {
  std::string name;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<CheckRow> rows;
  bool all_pass = true;
  std::string to_text() const;
};

/// Compare every closed-form integral against the quadrature oracle over
/// seeded random draws: exponential moments E_k, the correlation moments
/// I^(1..3) and the product integral w for all four families, and the exact
/// trend Gram table.  perturb_canary injects a deliberate error into one
/// Gaussian moment to demonstrate the check's sensitivity.
ValidationReport validate_integrals(std::uint64_t seed, int draws_per_family,
                                    bool perturb_canary = false);

}  // namespace cfgp
