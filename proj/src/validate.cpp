#include "cfgp/validate.hpp"

#include "cfgp/integrals.hpp"
#include "cfgp/kernel.hpp"
#include "cfgp/rng.hpp"
#include "cfgp/trend.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <vector>

namespace cfgp {

double quad_integrate(const std::function<double(double)>& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 15,
                                                                       1e-12);
}

namespace {

double corr_1d(CorrFamily family, double phi, double h) {
  return corr_eval_1d(family, phi, h);
}

// Integrate over [0, 1] split at interior knots. The Matern integrands have a
// kink where |u - x| crosses zero, and adaptive quadrature over a single panel
// loses several digits there; piecewise-smooth panels restore full accuracy.
double quad_unit_split(const std::function<double(double)>& f,
                       std::initializer_list<double> knots) {
  std::vector<double> pts{0.0, 1.0};
  for (double k : knots)
    if (k > 0.0 && k < 1.0) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += quad_integrate(f, pts[i], pts[i + 1]);
  return total;
}

const CorrFamily kFamilies[] = {CorrFamily::Gaussian, CorrFamily::Matern05,
                                CorrFamily::Matern15, CorrFamily::Matern25};

struct Accum {
  double max_err = 0.0;
  void add(double got, double want) { max_err = std::max(max_err, std::abs(got - want)); }
};

}  // namespace

std::string ValidationReport::to_text() const {
  std::string out = "check                          max_err      tol          status\n";
  char buf[160];
  for (const CheckRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-30s %-12.3e %-12.3e %s\n", r.name.c_str(),
                  r.max_err, r.tol, r.pass ? "PASS" : "FAIL");
    out += buf;
  }
  out += all_pass ? "all checks passed\n" : "CHECK FAILURES PRESENT\n";
  return out;
}

ValidationReport validate_integrals(std::uint64_t seed, int draws_per_family,
                                    bool perturb_canary) {
  if (draws_per_family < 1) throw config_error("validate_integrals: need at least one draw");
  ValidationReport rep;
  const double tol = 1e-8;
  auto push = [&](const std::string& name, double err) {
    CheckRow row{name, err, tol, err <= tol};
    rep.all_pass = rep.all_pass && row.pass;
    rep.rows.push_back(row);
  };

  Rng rng(derive_seed(seed, 0x56414C));

  {  // exponential moments over scattered (k, z)
    Accum acc;
    for (int i = 0; i < draws_per_family; ++i) {
      const int k = rng.uniform_int(9);
      const double z = std::exp(rng.uniform(std::log(1e-3), std::log(50.0)));
      const double oracle =
          quad_integrate([&](double w) { return std::pow(w, k) * std::exp(-w); }, 0.0, z);
      acc.add(ek_integral(k, z), oracle);
    }
    push("ek_moment", acc.max_err);
  }

  for (CorrFamily fam : kFamilies) {
    for (int q = 1; q <= 3; ++q) {
      Accum acc;
      for (int i = 0; i < draws_per_family; ++i) {
        const double phi = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
        const double x = rng.uniform();
        const double oracle = quad_unit_split(
            [&](double u) { return std::pow(u, q - 1) * corr_1d(fam, phi, u - x); }, {x});
        double got = corr_moment(fam, phi, q, x);
        if (perturb_canary && fam == CorrFamily::Gaussian && q == 1)
          got *= 1.0 + 1e-6;  // deliberate fault injection for the sensitivity check
        acc.add(got, oracle);
      }
      push("I" + std::to_string(q) + "_" + to_string(fam), acc.max_err);
    }
  }

  for (CorrFamily fam : kFamilies) {
    Accum acc;
    for (int i = 0; i < draws_per_family; ++i) {
      const double phi = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
      const double y = rng.uniform();
      const double z = rng.uniform();
      const double oracle = quad_unit_split(
          [&](double u) { return corr_1d(fam, phi, u - y) * corr_1d(fam, phi, u - z); },
          {y, z});
      acc.add(corr_product_integral(fam, phi, y, z), oracle);
    }
    push("w_" + std::string(to_string(fam)), acc.max_err);
  }

  {  // exact trend Gram table vs nested quadrature, d = 2 quadratic basis
    TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};
    const int d = 2;
    Mat G = g_matrix(basis, d);
    const std::vector<MonomialPoly> polys = basis_zero_fidelity_polys(basis, d);
    auto poly_eval = [&](const MonomialPoly& p, double x0, double x1) {
      double acc = 0.0;
      for (const MonomialPoly::Term& t : p.terms)
        acc += t.coef * std::pow(x0, t.exp[0]) * std::pow(x1, t.exp[1]);
      return acc;
    };
    Accum acc;
    for (int a = 0; a < static_cast<int>(polys.size()); ++a) {
      for (int b = 0; b <= a; ++b) {
        const double oracle = quad_integrate(
            [&](double x0) {
              return quad_integrate(
                  [&](double x1) {
                    return poly_eval(polys[a], x0, x1) * poly_eval(polys[b], x0, x1);
                  },
                  0.0, 1.0);
            },
            0.0, 1.0);
        acc.add(G(a, b), oracle);
      }
    }
    push("g_table_quadratic", acc.max_err);
  }

  return rep;
}

}  // namespace cfgp
