#include <doctest.h>

#include "cfgp/rng.hpp"
#include "cfgp/simulate.hpp"

#include <cmath>

using namespace cfgp;

namespace {

GpDrawParams small_draw_params() {
  GpDrawParams p;
  p.d = 1;
  p.m = 1;
  p.nx = 15;
  p.nt = 6;
  p.t_max = 1.0;
  p.spec.sigma2 = 1.0;
  p.spec.corr_phi1.family = CorrFamily::Gaussian;
  p.spec.corr_phi1.phi = Vec::Constant(1, 1.0);
  p.spec.corr_phi2.family = CorrFamily::Gaussian;
  p.spec.corr_phi2.phi = Vec::Constant(1, 1.0);
  p.spec.fidelity.gamma = 0.5;
  p.spec.fidelity.scale_a = Vec::Ones(1);
  p.spec.fidelity.exponents_l = Vec::Constant(1, 4.0);
  return p;
}

Vec vec1(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("poisson solution average at hand points") {
  CHECK(poisson_average(0.0) == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-14));
  CHECK(poisson_average(0.0) == doctest::Approx(0.4052847).epsilon(1e-6));
  // positive everywhere on the native domain
  for (double x = -1.0; x <= 1.0; x += 0.05) CHECK(poisson_average(x) > 0.0);
  // endpoint ratio: the quadratic denominators coincide at x = +-1
  const double want = (std::exp(1.0) + 1.0) / (std::exp(-1.0) + 1.0);
  CHECK(poisson_average(1.0) / poisson_average(-1.0) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("gp draws are deterministic in the seed") {
  const GpDrawParams p = small_draw_params();
  auto sim1 = make_gp_draw(p, 77);
  auto sim2 = make_gp_draw(p, 77);
  auto sim3 = make_gp_draw(p, 78);
  Rng rng(1);
  bool any_diff = false;
  for (int i = 0; i < 20; ++i) {
    const Vec x = vec1(rng.uniform());
    const Vec t = vec1(rng.uniform());
    CHECK(sim1->eval(x, t) == sim2->eval(x, t));
    if (sim1->eval(x, t) != sim3->eval(x, t)) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("gp draw exact slice is the zero fidelity limit") {
  const GpDrawParams p = small_draw_params();
  auto sim = make_gp_draw(p, 5);
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Vec x = vec1(rng.uniform());
    CHECK(sim->exact(x) == sim->eval(x, Vec::Zero(1)));
  }
  CHECK(sim->d() == 1);
  CHECK(sim->m() == 1);
}

TEST_CASE("gp draw error variance follows the fidelity decay law") {
  // on-lattice node so the conditioned surface reproduces the raw draw; the
  // empirical variance of y(x,t) - y(x,0) across seeds must match sigma2 t^4
  const GpDrawParams p = small_draw_params();
  const double x = 7.0 / 14.0;   // lattice node of linspace(0,1,15)
  const double t = 0.4;          // lattice level of linspace(0,1,6)
  const int n_seeds = 500;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    auto sim = make_gp_draw(p, 1000 + s);
    const double diff = sim->eval(vec1(x), vec1(t)) - sim->eval(vec1(x), vec1(0.0));
    sum += diff;
    sumsq += diff * diff;
  }
  const double mean = sum / n_seeds;
  const double var = sumsq / n_seeds - mean * mean;
  const double want = std::pow(t, 4.0);  // sigma2 = 1, a = 1, l = 4
  CHECK(var == doctest::Approx(want).epsilon(0.15));
}

TEST_CASE("gp draw interpolates continuously off lattice") {
  const GpDrawParams p = small_draw_params();
  auto sim = make_gp_draw(p, 9);
  const double f0 = sim->eval(vec1(0.41), vec1(0.37));
  const double f1 = sim->eval(vec1(0.41 + 1e-7), vec1(0.37));
  CHECK(std::abs(f0 - f1) < 1e-4);
}

TEST_CASE("oversized lattices are refused") {
  GpDrawParams p = small_draw_params();
  p.nx = 200;
  p.nt = 40;  // 8000 > default guard
  CHECK_THROWS_AS(make_gp_draw(p, 1), config_error);
}

TEST_CASE("synthetic surfaces decay toward the exact solution") {
  const Vec l = Vec::Constant(1, 4.0);
  auto exact = [](const Vec& x) { return std::sin(3.0 * x[0]); };
  auto shape = [](const Vec&, const Vec&) { return 1.0; };
  auto sim = make_synthetic(exact, shape, 0.5, l, 1, 1);

  const Vec x = vec1(0.3);
  CHECK(sim->eval(x, Vec::Zero(1)) == doctest::Approx(std::sin(0.9)).epsilon(1e-14));
  // amplitude c prod t^{l/2}: halving t divides the error by 2^{l/2} = 4
  const double e1 = sim->eval(x, vec1(0.8)) - sim->exact(x);
  const double e2 = sim->eval(x, vec1(0.4)) - sim->exact(x);
  CHECK(e1 == doctest::Approx(0.5 * std::pow(0.8, 2.0)).epsilon(1e-13));
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("simulator registry resolves the named kinds") {
  SimulatorSpec spec;
  spec.kind = "poisson";
  spec.d = 1;
  spec.m = 1;
  auto poisson = make_simulator(spec);
  // native domain [-1, 1] mapped onto the unit cube
  CHECK(poisson->exact(vec1(0.5)) == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-12));

  spec.kind = "sine";
  auto sine = make_simulator(spec);
  CHECK(std::isfinite(sine->eval(vec1(0.3), vec1(0.5))));
  // fidelity error vanishes at t = 0
  CHECK(sine->eval(vec1(0.3), Vec::Zero(1)) == sine->exact(vec1(0.3)));

  spec.kind = "gp_draw";
  spec.gp = small_draw_params();
  spec.seed = 3;
  auto gp = make_simulator(spec);
  CHECK(std::isfinite(gp->eval(vec1(0.3), vec1(0.5))));

  spec.kind = "unknown";
  CHECK_THROWS_AS(make_simulator(spec), config_error);
}

TEST_CASE("plan evaluation fills the dataset row by row") {
  SimulatorSpec spec;
  spec.kind = "sine";
  spec.d = 1;
  spec.m = 1;
  auto sim = make_simulator(spec);

  DesignPlan plan;
  plan.X = Mat(3, 1);
  plan.X << 0.1, 0.5, 0.9;
  plan.T = Mat(3, 1);
  plan.T << 1.0, 0.5, 0.25;
  const Dataset data = evaluate_plan(*sim, plan);
  CHECK(data.n() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(data.y[i] == sim->eval(plan.X.row(i), plan.T.row(i)));
}

}  // TEST_SUITE
