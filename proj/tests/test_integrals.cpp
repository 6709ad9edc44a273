#include <doctest.h>

#include "cfgp/integrals.hpp"
#include "cfgp/rng.hpp"
#include "cfgp/validate.hpp"

#include <algorithm>
#include <cmath>

using namespace cfgp;

namespace {

const CorrFamily kFamilies[] = {CorrFamily::Gaussian, CorrFamily::Matern05,
                                CorrFamily::Matern15, CorrFamily::Matern25};

// Piecewise quadrature over [0,1] split at the interior kink of the Matern
// integrands; one panel per smooth segment keeps the oracle near 1e-12.
double quad_split(const std::function<double(double)>& f, double k1, double k2 = -1.0) {
  double pts[4] = {0.0, 1.0, 2.0, 2.0};
  int np = 2;
  if (k1 > 0.0 && k1 < 1.0) pts[np++] = k1;
  if (k2 > 0.0 && k2 < 1.0) pts[np++] = k2;
  std::sort(pts, pts + np);
  double total = 0.0;
  for (int i = 0; i + 1 < np; ++i) total += quad_integrate(f, pts[i], pts[i + 1]);
  return total;
}

double corr1(CorrFamily fam, double phi, double h) { return corr_eval_1d(fam, phi, h); }

}  // namespace

TEST_SUITE("integrals") {

TEST_CASE("exponential moments at hand points") {
  // E_0(z) = 1 - e^{-z},  E_1(z) = 1 - (1 + z) e^{-z}
  for (double z : {0.01, 0.5, 1.0, 3.0, 20.0}) {
    CHECK(ek_integral(0, z) == doctest::Approx(1.0 - std::exp(-z)).epsilon(1e-13));
    CHECK(ek_integral(1, z) ==
          doctest::Approx(1.0 - (1.0 + z) * std::exp(-z)).epsilon(1e-13));
  }
  CHECK(ek_integral(4, 0.0) == 0.0);
}

TEST_CASE("exponential moments match quadrature across the ladder") {
  Rng rng(31);
  for (int k = 0; k <= 12; ++k) {
    for (int rep = 0; rep < 12; ++rep) {
      const double z = std::exp(rng.uniform(std::log(1e-3), std::log(60.0)));
      const double oracle =
          quad_integrate([&](double w) { return std::pow(w, k) * std::exp(-w); }, 0.0, z);
      CHECK(ek_integral(k, z) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("exponential moments are monotone in z") {
  for (int k : {0, 3, 7, 12}) {
    double prev = 0.0;
    for (double z = 0.25; z < 10.0; z += 0.25) {
      const double cur = ek_integral(k, z);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}

TEST_CASE("gaussian first moment at the midpoint") {
  // int_0^1 exp(-(u - 1/2)^2) du = sqrt(pi) erf(1/2)
  const double want = std::sqrt(M_PI) * std::erf(0.5);
  CHECK(corr_moment(CorrFamily::Gaussian, 1.0, 1, 0.5) ==
        doctest::Approx(want).epsilon(1e-13));
  CHECK(corr_moment(CorrFamily::Gaussian, 1.0, 1, 0.5) ==
        doctest::Approx(0.92255).epsilon(2e-5));
}

TEST_CASE("matern05 first moment at the left edge") {
  // int_0^1 e^{-u} du
  CHECK(corr_moment(CorrFamily::Matern05, 1.0, 1, 0.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
  CHECK(corr_moment(CorrFamily::Matern05, 1.0, 1, 0.0) ==
        doctest::Approx(0.6321206).epsilon(1e-6));
}

TEST_CASE("first moments obey the reflection symmetry") {
  Rng rng(32);
  for (CorrFamily fam : kFamilies) {
    for (int rep = 0; rep < 25; ++rep) {
      const double phi = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
      const double x = rng.uniform();
      CHECK(corr_moment(fam, phi, 1, x) ==
            doctest::Approx(corr_moment(fam, phi, 1, 1.0 - x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("correlation moments match quadrature up to fifth order") {
  Rng rng(33);
  for (CorrFamily fam : kFamilies) {
    for (int q = 1; q <= 5; ++q) {
      for (int rep = 0; rep < 10; ++rep) {
        const double phi = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
        const double x = rng.uniform();
        const double oracle = quad_split(
            [&](double u) { return std::pow(u, q - 1) * corr1(fam, phi, u - x); }, x);
        CHECK(corr_moment(fam, phi, q, x) == doctest::Approx(oracle).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("product integral at coincident edge points") {
  // int_0^1 e^{-2u} du = (1 - e^{-2}) / 2
  const double want = (1.0 - std::exp(-2.0)) / 2.0;
  CHECK(corr_product_integral(CorrFamily::Matern05, 1.0, 0.0, 0.0) ==
        doctest::Approx(want).epsilon(1e-13));
  CHECK(corr_product_integral(CorrFamily::Matern05, 1.0, 0.0, 0.0) ==
        doctest::Approx(0.4323324).epsilon(1e-6));
}

TEST_CASE("product integral is symmetric and matches quadrature") {
  Rng rng(34);
  for (CorrFamily fam : kFamilies) {
    for (int rep = 0; rep < 20; ++rep) {
      const double phi = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
      const double y = rng.uniform(), z = rng.uniform();
      const double got = corr_product_integral(fam, phi, y, z);
      CHECK(got == doctest::Approx(corr_product_integral(fam, phi, z, y)).epsilon(1e-12));
      const double oracle = quad_split(
          [&](double u) { return corr1(fam, phi, u - y) * corr1(fam, phi, u - z); }, y, z);
      CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("w matrix tensorizes over dimensions") {
  Rng rng(35);
  CorrelationSpec corr1spec;
  corr1spec.family = CorrFamily::Gaussian;
  corr1spec.phi = Vec(2);
  corr1spec.phi << 1.5, 0.7;
  const double sigma2 = 1.9;

  Mat X(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int r = 0; r < 2; ++r) X(i, r) = rng.uniform();

  const Mat W = w_matrix(X, corr1spec, sigma2);
  CHECK(W.rows() == 3);
  CHECK((W - W.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double want = sigma2 * sigma2;
      for (int r = 0; r < 2; ++r)
        want *= corr_product_integral(CorrFamily::Gaussian, corr1spec.phi[r], X(i, r),
                                      X(j, r));
      CHECK(W(i, j) == doctest::Approx(want).epsilon(1e-12));
      // against a genuine 2-D quadrature oracle
      const double oracle =
          quad_integrate(
              [&](double u0) {
                return quad_integrate(
                    [&](double u1) {
                      return corr1(CorrFamily::Gaussian, corr1spec.phi[0], u0 - X(i, 0)) *
                             corr1(CorrFamily::Gaussian, corr1spec.phi[0], u0 - X(j, 0)) *
                             corr1(CorrFamily::Gaussian, corr1spec.phi[1], u1 - X(i, 1)) *
                             corr1(CorrFamily::Gaussian, corr1spec.phi[1], u1 - X(j, 1));
                    },
                    0.0, 1.0);
              },
              0.0, 1.0) *
          sigma2 * sigma2;
      CHECK(W(i, j) == doctest::Approx(oracle).epsilon(1e-8));
    }
  }

  // vector and scalar forms agree with the matrix convention
  Vec q(2);
  q << 0.21, 0.84;
  const Vec wv = w_vector(X, q, corr1spec, sigma2);
  for (int i = 0; i < 3; ++i) {
    double want = sigma2 * sigma2;
    for (int r = 0; r < 2; ++r)
      want *= corr_product_integral(CorrFamily::Gaussian, corr1spec.phi[r], X(i, r), q[r]);
    CHECK(wv[i] == doctest::Approx(want).epsilon(1e-12));
  }
  double wants = sigma2 * sigma2;
  for (int r = 0; r < 2; ++r)
    wants *= corr_product_integral(CorrFamily::Gaussian, corr1spec.phi[r], q[r], q[r]);
  CHECK(w_scalar(q, corr1spec, sigma2) == doctest::Approx(wants).epsilon(1e-12));
}

TEST_CASE("h matrix under the constant basis is a product of first moments") {
  Rng rng(36);
  CorrelationSpec c1;
  c1.family = CorrFamily::Matern15;
  c1.phi = Vec(2);
  c1.phi << 2.0, 0.9;
  const double sigma2 = 1.3;
  TrendBasis basis{TrendKind::Constant, false};

  Mat X(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int r = 0; r < 2; ++r) X(i, r) = rng.uniform();

  const Mat H = h_matrix(X, basis, c1, sigma2);
  CHECK(H.rows() == 4);
  CHECK(H.cols() == 1);
  for (int i = 0; i < 4; ++i) {
    const double want = sigma2 * corr_moment(CorrFamily::Matern15, c1.phi[0], 1, X(i, 0)) *
                        corr_moment(CorrFamily::Matern15, c1.phi[1], 1, X(i, 1));
    CHECK(H(i, 0) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("h matrix fidelity trend column vanishes") {
  CorrelationSpec c1;
  c1.family = CorrFamily::Gaussian;
  c1.phi = Vec(1);
  c1.phi << 1.0;
  TrendBasis basis{TrendKind::Constant, true};
  Mat X(3, 1);
  X << 0.2, 0.5, 0.8;
  const Mat H = h_matrix(X, basis, c1, 2.0);
  CHECK(H.cols() == 2);
  CHECK(H.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("h matrix quadratic columns match quadrature") {
  Rng rng(37);
  CorrelationSpec c1;
  c1.family = CorrFamily::Matern25;
  c1.phi = Vec(2);
  c1.phi << 1.2, 3.3;
  const double sigma2 = 0.8;
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};

  Mat X(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int r = 0; r < 2; ++r) X(i, r) = rng.uniform();

  const Mat H = h_matrix(X, basis, c1, sigma2);
  const std::vector<MonomialPoly> polys = basis_zero_fidelity_polys(basis, 2);
  REQUIRE(H.cols() == static_cast<int>(polys.size()));
  auto poly_eval = [&](const MonomialPoly& p, double x0, double x1) {
    double acc = 0.0;
    for (const MonomialPoly::Term& t : p.terms)
      acc += t.coef * std::pow(x0, t.exp[0]) * std::pow(x1, t.exp[1]);
    return acc;
  };
  for (int i = 0; i < 2; ++i) {
    for (int a = 0; a < H.cols(); ++a) {
      const double oracle =
          quad_integrate(
              [&](double u0) {
                return quad_integrate(
                    [&](double u1) {
                      return poly_eval(polys[a], u0, u1) *
                             corr1(c1.family, c1.phi[0], u0 - X(i, 0)) *
                             corr1(c1.family, c1.phi[1], u1 - X(i, 1));
                    },
                    0.0, 1.0);
              },
              0.0, 1.0) *
          sigma2;
      CHECK(H(i, a) == doctest::Approx(oracle).epsilon(1e-8));
    }
  }
}

TEST_CASE("trend gram table entries are exact rationals") {
  // d = 2 quadratic basis with interactions. Legendre orthogonality makes the
  // table diagonal; the diagonal entries are small rationals and the doubles
  // must match the direct divisions bit for bit.
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};
  const Mat G = g_matrix(basis, 2);
  REQUIRE(G.rows() == 6);
  // column order: 1, 2x1-1, 2x2-1, L2(x1), L2(x2), (2x1-1)(2x2-1)
  CHECK(G(0, 0) == 1.0);
  CHECK(G(1, 1) == 1.0 / 3.0);
  CHECK(G(2, 2) == 1.0 / 3.0);
  CHECK(G(3, 3) == 1.0 / 5.0);
  CHECK(G(4, 4) == 1.0 / 5.0);
  CHECK(G(5, 5) == 1.0 / 9.0);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      if (a != b) CHECK(G(a, b) == 0.0);

  // constant-basis table and the cross moment of the constant with degree one:
  // int 1 dx = 1, int 1 * (2x-1) dx = 0, matching int x dx = 1/2 shifted.
  const Mat Gc = g_matrix(TrendBasis{TrendKind::Constant, false}, 3);
  REQUIRE(Gc.rows() == 1);
  CHECK(Gc(0, 0) == 1.0);
}

TEST_CASE("trend gram table with fidelity column stays exact") {
  TrendBasis basis{TrendKind::Constant, true};
  const Mat G = g_matrix(basis, 1);
  REQUIRE(G.rows() == 2);
  CHECK(G(0, 0) == 1.0);
  // the fidelity column vanishes on the zero-fidelity surface
  CHECK(G(0, 1) == 0.0);
  CHECK(G(1, 1) == 0.0);
}

TEST_CASE("gram table matches quadrature in three dimensions") {
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};
  const int d = 3;
  const Mat G = g_matrix(basis, d);
  const std::vector<MonomialPoly> polys = basis_zero_fidelity_polys(basis, d);
  REQUIRE(G.rows() == static_cast<int>(polys.size()));
  // exact monomial integration oracle: int prod x_r^{e_r} dx = prod 1/(e_r+1)
  auto pair_integral = [&](const MonomialPoly& pa, const MonomialPoly& pb) {
    double acc = 0.0;
    for (const MonomialPoly::Term& ta : pa.terms) {
      for (const MonomialPoly::Term& tb : pb.terms) {
        double v = ta.coef * tb.coef;
        for (int r = 0; r < d; ++r) v /= ta.exp[r] + tb.exp[r] + 1;
        acc += v;
      }
    }
    return acc;
  };
  for (int a = 0; a < G.rows(); ++a)
    for (int b = 0; b <= a; ++b)
      CHECK(G(a, b) == doctest::Approx(pair_integral(polys[a], polys[b])).epsilon(1e-15));
}

TEST_CASE("full oracle conformance sweep stays green") {
  const ValidationReport rep = validate_integrals(99, 40);
  CHECK(rep.all_pass);
  CHECK(rep.rows.size() == 18);
  for (const CheckRow& r : rep.rows) {
    CAPTURE(r.name);
    CHECK(r.pass);
    CHECK(r.max_err <= r.tol);
  }
}

TEST_CASE("oracle sweep detects an injected coefficient fault") {
  const ValidationReport rep = validate_integrals(99, 40, true);
  CHECK_FALSE(rep.all_pass);
  int failing = 0;
  for (const CheckRow& r : rep.rows)
    if (!r.pass) ++failing;
  CHECK(failing == 1);
}

}  // TEST_SUITE
