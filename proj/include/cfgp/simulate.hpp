#pragma once

#include "cfgp/design.hpp"
#include "cfgp/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace cfgp {

/// Deterministic response surface y(x, t) on the unit input cube with
/// nonnegative fidelities; t = 0 is the exact solution.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual double eval(const Vec& x, const Vec& t) const = 0;
  virtual int d() const = 0;
  virtual int m() const = 0;
  /// y(x, 0)
  double exact(const Vec& x) const { return eval(x, Vec::Zero(m())); }
};

/// Analytic average of the Poisson problem's solution over its disk of
/// influence: phi(x) = 2 (e^x + 1) / (x^2 + pi^2) on the native domain
/// x in [-1, 1].
double poisson_average(double x);

struct GpDrawParams {
  CombinedCovSpec spec;   // sigma2=1, phi1=1, a=1, l=4 by default
  int d = 1;
  int m = 1;
  int nx = 101;           // lattice points per input dimension
  int nt = 21;            // fidelity levels per coordinate, including t = 0
  double t_max = 1.0;
  int max_lattice = 6000; // memory guard on total lattice size

  GpDrawParams();
};

/// A draw from the surrogate prior on a fine (x, t) lattice including the
/// t = 0 slice, extended off-lattice by conditioning the same GP on the
/// drawn values.  The function therefore lies exactly in the model class
/// and its t = 0 slice is the exact solution.
std::unique_ptr<Simulator> make_gp_draw(const GpDrawParams& params, std::uint64_t seed);

using ExactFn = std::function<double(const Vec&)>;
using ErrorShapeFn = std::function<double(const Vec&, const Vec&)>;

/// y(x, t) = exact(x) + c * prod_j t_j^(l_j / 2) * error_shape(x, t);
/// the amplitude matches the Var(delta) = O(t^l) decay law.
std::unique_ptr<Simulator> make_synthetic(ExactFn exact, ErrorShapeFn shape, double c,
                                          const Vec& exponents_l, int d, int m);

struct SimulatorSpec {
  std::string kind = "gp_draw";  // gp_draw | poisson | sine
  GpDrawParams gp;
  double c = 0.5;                // synthetic error amplitude
  Vec exponents_l;               // synthetic decay exponents (default 4)
  int d = 1;
  int m = 1;
  std::uint64_t seed = 1;
};

/// Registry addressable by name from configuration.
std::unique_ptr<Simulator> make_simulator(const SimulatorSpec& spec);

/// Evaluate a design plan, producing a dataset ready for fitting.
Dataset evaluate_plan(const Simulator& sim, const DesignPlan& plan);

}  // namespace cfgp
