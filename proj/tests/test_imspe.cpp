#include <doctest.h>

#include "cfgp/imspe.hpp"
#include "cfgp/rng.hpp"
#include "cfgp/validate.hpp"

#include <cmath>

using namespace cfgp;

namespace {

CombinedCovSpec make_spec(int d, double sigma2, double phi1, double phi2, double gamma,
                          CorrFamily fam = CorrFamily::Gaussian) {
  CombinedCovSpec spec;
  spec.sigma2 = sigma2;
  spec.corr_phi1.family = fam;
  spec.corr_phi1.phi = Vec::Constant(d, phi1);
  spec.corr_phi2.family = fam;
  spec.corr_phi2.phi = Vec::Constant(d, phi2);
  spec.fidelity.gamma = gamma;
  spec.fidelity.scale_a = Vec::Ones(1);
  spec.fidelity.exponents_l = Vec::Constant(1, 4.0);
  return spec;
}

Dataset lattice_dataset(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.X.resize(n, d);
  data.T.resize(n, 1);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < d; ++r) data.X(i, r) = rng.uniform();
    data.T(i, 0) = rng.uniform(0.2, 1.0);
    data.y[i] = rng.normal();
  }
  return data;
}

// quadrature of the zero-fidelity posterior variance over the unit cube
double imspe_by_quadrature(const Dataset& data, const TrendBasis& basis,
                           const CombinedCovSpec& spec, double jitter_abs) {
  FittedModel model(data, basis, spec, /*profile_sigma2=*/false);
  (void)jitter_abs;
  const int d = data.d();
  const Vec t0 = Vec::Zero(1);
  if (d == 1) {
    return quad_integrate(
        [&](double x) {
          double mean = 0.0, var = 0.0;
          model.posterior(Vec::Constant(1, x), t0, mean, var);
          return var;
        },
        0.0, 1.0);
  }
  return quad_integrate(
      [&](double x0) {
        return quad_integrate(
            [&](double x1) {
              Vec x(2);
              x << x0, x1;
              double mean = 0.0, var = 0.0;
              model.posterior(x, t0, mean, var);
              return var;
            },
            0.0, 1.0);
      },
      0.0, 1.0);
}

}  // namespace

TEST_SUITE("imspe") {

TEST_CASE("closed form agrees with quadrature of the predictive variance") {
  TrendBasis bases[] = {{TrendKind::Constant, false},
                        {TrendKind::LegendreQuadraticWithInteractions, false}};
  for (const TrendBasis& basis : bases) {
    for (int n : {3, 6}) {
      const Dataset data = lattice_dataset(n, 1, 100 + n);
      const CombinedCovSpec spec = make_spec(1, 1.8, 1.2, 2.0, 0.5);
      if (basis.kind == TrendKind::LegendreQuadraticWithInteractions && n == 3)
        continue;  // needs n > p
      const ImspeComponents comp = imspe_closed(data, basis, spec);
      const double oracle = imspe_by_quadrature(data, basis, spec, comp.jitter_abs);
      CHECK(comp.value == doctest::Approx(oracle).epsilon(1e-3));
    }
  }
  // two input dimensions
  const Dataset data2 = lattice_dataset(6, 2, 104);
  const CombinedCovSpec spec2 = make_spec(2, 1.0, 1.1, 1.6, 0.4, CorrFamily::Matern25);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeComponents comp2 = imspe_closed(data2, basis, spec2);
  const double oracle2 = imspe_by_quadrature(data2, basis, spec2, comp2.jitter_abs);
  CHECK(comp2.value == doctest::Approx(oracle2).epsilon(1e-3));
}

TEST_CASE("closed form is bounded by the prior mass and permutation invariant") {
  const Dataset data = lattice_dataset(8, 1, 105);
  const CombinedCovSpec spec = make_spec(1, 2.4, 1.0, 1.5, 0.6);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeComponents comp = imspe_closed(data, basis, spec);
  CHECK(comp.E == doctest::Approx(spec.sigma2).epsilon(1e-12));
  CHECK(comp.value >= 0.0);
  CHECK(comp.value <= comp.E);

  // permuting dataset rows leaves the trace expressions unchanged
  Dataset perm;
  std::vector<int> order = {5, 2, 7, 0, 3, 6, 1, 4};
  perm.X.resize(8, 1);
  perm.T.resize(8, 1);
  perm.y.resize(8);
  for (int i = 0; i < 8; ++i) {
    perm.X.row(i) = data.X.row(order[i]);
    perm.T.row(i) = data.T.row(order[i]);
    perm.y[i] = data.y[order[i]];
  }
  const ImspeComponents comp_p = imspe_closed(perm, basis, spec);
  CHECK(comp_p.value == doctest::Approx(comp.value).epsilon(1e-9));
}

TEST_CASE("state reproduces the closed form and prices extensions consistently") {
  const CorrFamily fams[] = {CorrFamily::Gaussian, CorrFamily::Matern05,
                             CorrFamily::Matern15, CorrFamily::Matern25};
  TrendBasis bases[] = {{TrendKind::Constant, false},
                        {TrendKind::LegendreQuadraticWithInteractions, false}};
  Rng rng(106);
  for (CorrFamily fam : fams) {
    for (const TrendBasis& basis : bases) {
      const Dataset data = lattice_dataset(basis.kind == TrendKind::Constant ? 4 : 6, 1,
                                           107 + static_cast<int>(fam));
      const CombinedCovSpec spec = make_spec(1, 1.3, 1.1, 1.9, 0.55, fam);
      const ImspeState state(data, basis, spec);
      const ImspeComponents comp =
          imspe_closed(data, basis, spec, ImspeOptions{state.jitter_abs()});
      CHECK(state.imspe() == doctest::Approx(comp.value).epsilon(1e-10));

      for (int rep = 0; rep < 12; ++rep) {
        const Vec x = Vec::Constant(1, rng.uniform());
        const Vec t = Vec::Constant(1, rng.uniform(0.05, 1.0));
        const double red = state.reduction(x, t);
        CHECK(red > -1e-8 * comp.E);
        // from-scratch evaluation of the extended design under the same shift
        const Dataset ext = data.with_row_appended(x, t, 0.0);
        const ImspeComponents next =
            imspe_closed(ext, basis, spec, ImspeOptions{state.jitter_abs()});
        CHECK(std::abs((state.imspe() - red) - next.value) < 1e-8 * comp.E);
      }
    }
  }
}

TEST_CASE("duplicating a design point is flagged as degenerate") {
  const Dataset data = lattice_dataset(5, 1, 111);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.0, 1.4, 0.5);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeState state(data, basis, spec);
  const double red = state.reduction(data.X.row(2), data.T.row(2));
  CHECK(std::isinf(red));
  CHECK(red < 0.0);
}

TEST_CASE("reductions shrink with fidelity under a fixed location") {
  // coarser shells carry less of the exact-surface signal: the reduction at
  // t close to 0 should dominate the reduction at t close to 1
  const Dataset data = lattice_dataset(6, 1, 112);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.0, 2.0, 0.5);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeState state(data, basis, spec);
  const Vec x = Vec::Constant(1, 0.37);
  const double fine = state.reduction(x, Vec::Constant(1, 0.05));
  const double coarse = state.reduction(x, Vec::Constant(1, 1.0));
  CHECK(fine > coarse);
}

TEST_CASE("criterion optimizer beats a dense reference grid") {
  const Dataset data = lattice_dataset(8, 1, 113);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.0, 1.8, 0.5);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeState state(data, basis, spec);
  const CostModel cost = CostModel::power_single(2.0);

  CriterionOptions opts;
  opts.n_probes = 48;
  opts.n_starts = 10;
  opts.max_iters = 60;
  opts.seed = 5;
  opts.t_lo = Vec::Constant(1, 0.25);
  opts.t_hi = Vec::Ones(1);
  const CriterionResult res = optimize_criterion(state, cost, opts);
  REQUIRE(res.found);
  CHECK(res.value == doctest::Approx(res.reduction / res.cost).epsilon(1e-12));
  CHECK(res.x[0] >= 0.0);
  CHECK(res.x[0] <= 1.0);
  CHECK(res.t[0] >= 0.25);
  CHECK(res.t[0] <= 1.0);

  double grid_best = -std::numeric_limits<double>::infinity();
  for (int ix = 0; ix < 100; ++ix) {
    const Vec x = Vec::Constant(1, (ix + 0.5) / 100.0);
    for (int it = 0; it < 20; ++it) {
      const Vec t = Vec::Constant(1, 0.25 + 0.75 * (it + 0.5) / 20.0);
      const double red = state.reduction(x, t);
      if (!std::isfinite(red)) continue;
      grid_best = std::max(grid_best, red / cost.eval(t));
    }
  }
  CHECK(res.value >= grid_best - 1e-10);
}

TEST_CASE("criterion scales inversely with cost and keeps its argmax") {
  const Dataset data = lattice_dataset(7, 1, 114);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.2, 1.5, 0.45);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeState state(data, basis, spec);

  CriterionOptions opts;
  opts.seed = 6;
  opts.t_lo = Vec::Constant(1, 0.25);
  opts.t_hi = Vec::Ones(1);
  const CriterionResult base =
      optimize_criterion(state, CostModel::param_single(2.0, 1.0), opts);
  const CriterionResult doubled =
      optimize_criterion(state, CostModel::param_single(2.0, 2.0), opts);
  REQUIRE(base.found);
  REQUIRE(doubled.found);
  CHECK(doubled.value == doctest::Approx(base.value / 2.0).epsilon(1e-12));
  CHECK(doubled.x[0] == doctest::Approx(base.x[0]).epsilon(1e-9));
  CHECK(doubled.t[0] == doctest::Approx(base.t[0]).epsilon(1e-9));
}

TEST_CASE("constant cost reduces the criterion to the pure reduction") {
  const Dataset data = lattice_dataset(6, 1, 115);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.0, 1.6, 0.5);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeState state(data, basis, spec);

  CriterionOptions opts;
  opts.seed = 7;
  opts.t_lo = Vec::Constant(1, 0.25);
  opts.t_hi = Vec::Ones(1);
  const CriterionResult flat =
      optimize_criterion(state, CostModel::power_single(0.0), opts);
  REQUIRE(flat.found);
  CHECK(flat.cost == 1.0);
  CHECK(flat.value == doctest::Approx(flat.reduction).epsilon(1e-13));
  // a constant cost cannot push the choice toward coarse fidelities; the
  // reduction itself is maximized near the exact slice
  CHECK(flat.t[0] < 0.5);
}

TEST_CASE("collapsed fidelity box turns the search into input-only") {
  const Dataset data = lattice_dataset(6, 1, 116);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.0, 1.6, 0.5);
  TrendBasis basis{TrendKind::Constant, false};
  const ImspeState state(data, basis, spec);

  CriterionOptions opts;
  opts.seed = 8;
  opts.t_lo = Vec::Constant(1, 0.5);
  opts.t_hi = Vec::Constant(1, 0.5);
  const CriterionResult res = optimize_criterion(state, CostModel::power_single(2.0), opts);
  REQUIRE(res.found);
  CHECK(res.t[0] == 0.5);
  CHECK(res.cost == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
  const Dataset data = lattice_dataset(5, 2, 117);
  const CombinedCovSpec spec = make_spec(1, 1.0, 1.0, 1.5, 0.5);  // d = 1 vs data d = 2
  TrendBasis basis{TrendKind::Constant, false};
  CHECK_THROWS_AS(ImspeState(data, basis, spec), config_error);
}

}  // TEST_SUITE
