#include <doctest.h>

#include "cfgp/gp.hpp"
#include "cfgp/rng.hpp"
#include "cfgp/trend.hpp"

#include <cmath>

using namespace cfgp;

namespace {

CombinedCovSpec default_spec(double sigma2 = 1.0) {
  CombinedCovSpec spec;
  spec.sigma2 = sigma2;
  spec.corr_phi1.family = CorrFamily::Gaussian;
  spec.corr_phi1.phi = Vec::Constant(1, 1.4);
  spec.corr_phi2.family = CorrFamily::Gaussian;
  spec.corr_phi2.phi = Vec::Constant(1, 2.2);
  spec.fidelity.gamma = 0.5;
  spec.fidelity.scale_a = Vec::Ones(1);
  spec.fidelity.exponents_l = Vec::Constant(1, 4.0);
  return spec;
}

Dataset small_dataset(int n, std::uint64_t seed, int d = 1, int m = 1) {
  Rng rng(seed);
  Dataset data;
  data.X.resize(n, d);
  data.T.resize(n, m);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < d; ++r) data.X(i, r) = (i + rng.uniform()) / n;
    for (int j = 0; j < m; ++j) data.T(i, j) = rng.uniform(0.1, 1.0);
    data.y[i] = std::sin(3.0 * data.X(i, 0)) + 0.2 * rng.normal();
  }
  return data;
}

Vec vec1(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("constant trend basis") {
  TrendBasis basis{TrendKind::Constant, false};
  CHECK(basis.column_count(3) == 1);
  const Vec f = trend_eval(vec1(0.37), vec1(0.5), basis, Vec::Constant(1, 4.0));
  REQUIRE(f.size() == 1);
  CHECK(f[0] == 1.0);
}

TEST_CASE("legendre basis values at the cube center") {
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};
  CHECK(basis.column_count(1) == 3);
  const Vec f = trend_eval(vec1(0.5), vec1(0.3), basis, Vec::Constant(1, 4.0));
  REQUIRE(f.size() == 3);
  CHECK(f[0] == 1.0);
  CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-15));   // 2x - 1 at x = 1/2
  CHECK(f[2] == doctest::Approx(-0.5).epsilon(1e-15));  // 6x^2 - 6x + 1 at x = 1/2
}

TEST_CASE("legendre basis counts interactions") {
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};
  CHECK(basis.column_count(2) == 6);
  CHECK(basis.column_count(3) == 10);  // 1 + 3 + 3 + 3
  TrendBasis with_t{TrendKind::LegendreQuadraticWithInteractions, true};
  CHECK(with_t.column_count(2) == 7);
}

TEST_CASE("fidelity trend column") {
  TrendBasis basis{TrendKind::Constant, true};
  const Vec l = Vec::Constant(1, 4.0);
  const Vec at0 = trend_eval(vec1(0.2), vec1(0.0), basis, l);
  REQUIRE(at0.size() == 2);
  CHECK(at0[1] == 0.0);
  const Vec at = trend_eval(vec1(0.2), vec1(0.5), basis, l);
  CHECK(at[1] == doctest::Approx(std::pow(0.5, 4.0)).epsilon(1e-15));

  // m = 2: product of powers
  Vec l2(2), t2(2);
  l2 << 4.0, 2.0;
  t2 << 0.5, 0.3;
  Vec x1 = vec1(0.2);
  const Vec f2 = trend_eval(x1, t2, basis, l2);
  CHECK(f2[1] == doctest::Approx(std::pow(0.5, 4.0) * std::pow(0.3, 2.0)).epsilon(1e-15));
}

TEST_CASE("zero fidelity polynomials reproduce the trend columns") {
  for (int d : {1, 2, 3}) {
    TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, true};
    const std::vector<MonomialPoly> polys = basis_zero_fidelity_polys(basis, d);
    CHECK(static_cast<int>(polys.size()) == basis.column_count(d));
    Rng rng(40 + d);
    Vec x(d), t = Vec::Constant(1, 0.0);
    for (int r = 0; r < d; ++r) x[r] = rng.uniform();
    const Vec f = trend_eval(x, t, basis, Vec::Constant(1, 4.0));
    for (std::size_t a = 0; a < polys.size(); ++a) {
      double acc = 0.0;
      for (const MonomialPoly::Term& term : polys[a].terms) {
        double v = term.coef;
        for (int r = 0; r < d; ++r) v *= std::pow(x[r], term.exp[r]);
        acc += v;
      }
      CHECK(acc == doctest::Approx(f[a]).epsilon(1e-13));
    }
  }
}

TEST_CASE("trend matrix stacks row evaluations") {
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, true};
  const Dataset data = small_dataset(5, 41, 2, 1);
  const Vec l = Vec::Constant(1, 4.0);
  const Mat F = trend_matrix(data.X, data.T, basis, l);
  CHECK(F.rows() == 5);
  CHECK(F.cols() == basis.column_count(2));
  for (int i = 0; i < 5; ++i) {
    const Vec f = trend_eval(data.X.row(i), data.T.row(i), basis, l);
    CHECK((F.row(i).transpose() - f).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("jittered cholesky factors near singular matrices") {
  // rank-deficient Gram matrix: two identical rows
  Mat A(3, 3);
  A << 2.0, 2.0, 0.5,
       2.0, 2.0, 0.5,
       0.5, 0.5, 1.0;
  const JitteredChol chol = cholesky_with_jitter(A);
  CHECK(chol.llt.info() == Eigen::Success);
  CHECK(chol.eta > 0.0);
  CHECK(chol.jitter_abs == doctest::Approx(chol.eta * A.diagonal().mean()).epsilon(1e-15));
  const Mat L = chol.llt.matrixL();
  const Mat R = L * L.transpose();
  const Mat want = A + chol.jitter_abs * Mat::Identity(3, 3);
  CHECK((R - want).cwiseAbs().maxCoeff() < 1e-12);

  // a healthy matrix takes the smallest rung
  Mat B = Mat::Identity(4, 4) * 3.0;
  const JitteredChol cb = cholesky_with_jitter(B);
  CHECK(cb.eta <= 1e-10);

  Mat neg = -Mat::Identity(2, 2);
  CHECK_THROWS_AS(cholesky_with_jitter(neg), numerical_error);
}

TEST_CASE("assembled single point covariance") {
  Dataset data;
  data.X = Mat::Constant(1, 1, 0.4);
  data.T = Mat::Constant(1, 1, 0.7);
  data.y = Vec::Constant(1, 1.0);
  const CombinedCovSpec spec = default_spec(2.0);
  TrendBasis basis{TrendKind::Constant, false};
  const AssembledMatrices am = assemble(data, basis, spec);
  const double t4 = std::pow(0.7, 4.0);
  CHECK(am.K0(0, 0) == doctest::Approx(1.0 + t4 + am.jitter_abs).epsilon(1e-14));
  CHECK(am.F(0, 0) == 1.0);
  CHECK(am.parts.K0(0, 0) == doctest::Approx(1.0 + t4).epsilon(1e-14));
}

TEST_CASE("assembled covariance matches pairwise kernel evaluation") {
  const Dataset data = small_dataset(3, 42);
  const CombinedCovSpec spec = default_spec(1.6);
  TrendBasis basis{TrendKind::Constant, false};
  const AssembledMatrices am = assemble(data, basis, spec);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double want = combined_cov(data.X.row(i), data.T.row(i), data.X.row(j),
                                       data.T.row(j), spec) /
                          spec.sigma2;
      const double jit = i == j ? am.jitter_abs : 0.0;
      CHECK(am.K0(i, j) == doctest::Approx(want + jit).epsilon(1e-14));
    }
  }
  // minimum eigenvalue after jitter stays positive
  Eigen::SelfAdjointEigenSolver<Mat> es(am.K0);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("posterior interpolates the training data") {
  const Dataset data = small_dataset(8, 43);
  const CombinedCovSpec spec = default_spec();
  TrendBasis basis{TrendKind::Constant, false};
  const FittedModel model(data, basis, spec);
  const double ynorm = data.y.norm();
  for (int i = 0; i < data.n(); ++i) {
    double mean = 0.0, var = 0.0;
    model.posterior(data.X.row(i), data.T.row(i), mean, var);
    CHECK(std::abs(mean - data.y[i]) <= 1e-6 * ynorm);
    CHECK(var >= 0.0);
    CHECK(var <= 1e-6 * model.sigma2());
  }
}

TEST_CASE("posterior matches an independent dense evaluation") {
  const Dataset data = small_dataset(6, 44);
  CombinedCovSpec spec = default_spec(1.0);
  TrendBasis basis{TrendKind::Constant, false};
  const FittedModel model(data, basis, spec);
  const int n = data.n();
  const double s2 = model.sigma2();

  // dense universal-kriging formulas assembled from scratch
  Mat K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K(i, j) = combined_cov(data.X.row(i), data.T.row(i), data.X.row(j), data.T.row(j),
                             spec) /
                spec.sigma2;
  K += model.jitter_abs() * Mat::Identity(n, n);
  K *= s2;
  const Mat F = Mat::Ones(n, 1);
  const Mat Kinv = K.inverse();
  const Mat P = F.transpose() * Kinv * F;
  const Vec beta = P.inverse() * F.transpose() * Kinv * data.y;
  CHECK(beta[0] == doctest::Approx(model.beta()[0]).epsilon(1e-9));

  Rng rng(45);
  for (int rep = 0; rep < 12; ++rep) {
    const Vec xq = vec1(rng.uniform());
    const Vec tq = vec1(rep % 3 == 0 ? 0.0 : rng.uniform(0.0, 1.0));
    Vec k(n);
    for (int i = 0; i < n; ++i)
      k[i] = combined_cov(xq, tq, data.X.row(i), data.T.row(i), spec) / spec.sigma2 * s2;
    const double kss =
        combined_cov(xq, tq, xq, tq, spec) / spec.sigma2 * s2;
    const Vec f = Vec::Ones(1);
    const double mean_want = f.dot(beta) + k.dot(Kinv * (data.y - F * beta));
    const Vec u = f - F.transpose() * Kinv * k;
    const double var_want =
        std::max(0.0, kss - k.dot(Kinv * k) + u.dot(P.inverse() * u));

    double mean = 0.0, var = 0.0;
    model.posterior(xq, tq, mean, var);
    CHECK(mean == doctest::Approx(mean_want).epsilon(1e-9));
    CHECK(var == doctest::Approx(var_want).epsilon(1e-8));
  }
}

TEST_CASE("posterior at the exact slice uses only the smooth correlation") {
  // the covariance vector to t = 0 ignores the design fidelities, so two
  // models whose data differ only in y (same X, T) give identical variances
  // and the variance at t = 0 equals the dense formula with R_phi1 entries
  const Dataset data = small_dataset(5, 46);
  const CombinedCovSpec spec = default_spec(2.3);
  TrendBasis basis{TrendKind::Constant, false};
  const FittedModel model(data, basis, spec);

  const Vec xq = vec1(0.31);
  double mean = 0.0, var = 0.0;
  model.posterior(xq, vec1(0.0), mean, var);

  const int n = data.n();
  const double s2 = model.sigma2();
  Mat K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K(i, j) = combined_cov(data.X.row(i), data.T.row(i), data.X.row(j), data.T.row(j),
                             spec) /
                spec.sigma2;
  K += model.jitter_abs() * Mat::Identity(n, n);
  K *= s2;
  Vec k(n);
  for (int i = 0; i < n; ++i)
    k[i] = s2 * corr_eval(Vec(xq - data.X.row(i).transpose()), spec.corr_phi1);
  const Mat F = Mat::Ones(n, 1);
  const Mat Kinv = K.inverse();
  const Mat P = F.transpose() * Kinv * F;
  const Vec u = Vec::Ones(1) - F.transpose() * Kinv * k;
  const double var_want = s2 - k.dot(Kinv * k) + u.dot(P.inverse() * u);
  CHECK(var == doctest::Approx(var_want).epsilon(1e-9));
}

TEST_CASE("posterior_many agrees with the scalar form") {
  const Dataset data = small_dataset(7, 47);
  const CombinedCovSpec spec = default_spec();
  TrendBasis basis{TrendKind::LegendreQuadraticWithInteractions, false};
  const FittedModel model(data, basis, spec);

  const int q = 9;
  Mat Xq(q, 1), Tq(q, 1);
  Rng rng(48);
  for (int i = 0; i < q; ++i) {
    Xq(i, 0) = rng.uniform();
    Tq(i, 0) = i % 2 == 0 ? 0.0 : rng.uniform(0.0, 1.0);
  }
  Vec mean, var;
  model.posterior_many(Xq, Tq, mean, var);
  REQUIRE(mean.size() == q);
  for (int i = 0; i < q; ++i) {
    double m1 = 0.0, v1 = 0.0;
    model.posterior(Xq.row(i), Tq.row(i), m1, v1);
    CHECK(mean[i] == doctest::Approx(m1).epsilon(1e-13));
    CHECK(var[i] == doctest::Approx(v1).epsilon(1e-13));
  }
}

TEST_CASE("dataset validation guards the model's preconditions") {
  Dataset data = small_dataset(4, 49);
  CHECK_NOTHROW(data.validate());

  Dataset dup = data;
  dup.X.row(2) = dup.X.row(0);
  dup.T.row(2) = dup.T.row(0);
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

  Dataset offcube = data;
  offcube.X(1, 0) = 1.5;
  CHECK_THROWS_AS(offcube.validate(), std::invalid_argument);

  Dataset badt = data;
  badt.T(0, 0) = 0.0;
  CHECK_THROWS_AS(badt.validate(), std::invalid_argument);

  Dataset empty;
  empty.X.resize(0, 1);
  empty.T.resize(0, 1);
  empty.y.resize(0);
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  // replicated x with distinct fidelities is legal
  Dataset reps = data;
  reps.X.row(3) = reps.X.row(0);
  CHECK_NOTHROW(reps.validate());
}

TEST_CASE("row append preserves and extends the dataset") {
  const Dataset data = small_dataset(3, 50);
  const Dataset ext = data.with_row_appended(vec1(0.9), vec1(0.25), 4.2);
  CHECK(ext.n() == 4);
  CHECK((ext.X.topRows(3) - data.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ext.X(3, 0) == 0.9);
  CHECK(ext.T(3, 0) == 0.25);
  CHECK(ext.y[3] == 4.2);
  CHECK_THROWS_AS(data.with_row_appended(Vec::Zero(2), vec1(0.5), 0.0),
                  std::invalid_argument);
}

}  // TEST_SUITE
