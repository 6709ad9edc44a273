#include <doctest.h>

#include "cfgp/kernel.hpp"
#include "cfgp/rng.hpp"

#include <cmath>

using namespace cfgp;

namespace {

CorrelationSpec corr(CorrFamily fam, std::initializer_list<double> phi) {
  CorrelationSpec s;
  s.family = fam;
  s.phi = Vec(static_cast<int>(phi.size()));
  int i = 0;
  for (double v : phi) s.phi[i++] = v;
  return s;
}

FidelityKernelSpec fidelity(double gamma, std::initializer_list<double> a,
                            std::initializer_list<double> l) {
  FidelityKernelSpec s;
  s.gamma = gamma;
  s.scale_a = Vec(static_cast<int>(a.size()));
  s.exponents_l = Vec(static_cast<int>(l.size()));
  int i = 0;
  for (double v : a) s.scale_a[i++] = v;
  i = 0;
  for (double v : l) s.exponents_l[i++] = v;
  return s;
}

Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

Vec vec2(double a, double b) {
  Vec out(2);
  out << a, b;
  return out;
}

const CorrFamily kFamilies[] = {CorrFamily::Gaussian, CorrFamily::Matern05,
                                CorrFamily::Matern15, CorrFamily::Matern25};

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("correlation equals one at zero lag") {
  Rng rng(11);
  for (CorrFamily fam : kFamilies) {
    for (int d = 1; d <= 3; ++d) {
      CorrelationSpec s;
      s.family = fam;
      s.phi = Vec(d);
      for (int r = 0; r < d; ++r) s.phi[r] = std::exp(rng.uniform(-2.0, 2.0));
      CHECK(corr_eval(Vec::Zero(d), s) == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("gaussian correlation at unit lag") {
  const double got = corr_eval(vec1(1.0), corr(CorrFamily::Gaussian, {1.0}));
  CHECK(got == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(got == doctest::Approx(0.3678794).epsilon(1e-6));
}

TEST_CASE("matern15 correlation at unit lag") {
  const double got = corr_eval(vec1(1.0), corr(CorrFamily::Matern15, {1.0}));
  const double want = (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
  CHECK(got == doctest::Approx(want).epsilon(1e-14));
  CHECK(got == doctest::Approx(0.483357).epsilon(1e-5));
}

TEST_CASE("matern25 closed form at a hand point") {
  const double phi = 0.7, h = 1.3;
  const double r = std::sqrt(5.0) * phi * h;
  const double want = (1.0 + r + r * r / 3.0) * std::exp(-r);
  CHECK(corr_eval(vec1(h), corr(CorrFamily::Matern25, {phi})) ==
        doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("correlation is symmetric, bounded, and separable") {
  Rng rng(12);
  for (CorrFamily fam : kFamilies) {
    for (int rep = 0; rep < 40; ++rep) {
      CorrelationSpec s;
      s.family = fam;
      s.phi = vec2(std::exp(rng.uniform(-2.0, 2.0)), std::exp(rng.uniform(-2.0, 2.0)));
      const Vec h = vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      const double v = corr_eval(h, s);
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
      CHECK(corr_eval(-h, s) == doctest::Approx(v).epsilon(1e-15));
      // separable product structure
      CorrelationSpec s0 = corr(fam, {s.phi[0]});
      CorrelationSpec s1 = corr(fam, {s.phi[1]});
      const double prod = corr_eval(vec1(h[0]), s0) * corr_eval(vec1(h[1]), s1);
      CHECK(v == doctest::Approx(prod).epsilon(1e-13));
    }
  }
}

TEST_CASE("correlation gradient vanishes at zero lag") {
  for (CorrFamily fam : kFamilies) {
    CorrelationSpec s = corr(fam, {0.8, 1.7});
    s.family = fam;
    for (int i = 0; i < 2; ++i) CHECK(corr_grad_phi(Vec::Zero(2), s, i) == 0.0);
  }
}

TEST_CASE("gaussian phi gradient at unit lag") {
  // d/dphi exp(-phi^2 h^2) = -2 phi h^2 exp(-phi^2 h^2); at phi = h = 1 this
  // is -2 e^{-1}, confirmed by the central difference below.
  const CorrelationSpec s = corr(CorrFamily::Gaussian, {1.0});
  const double got = corr_grad_phi(vec1(1.0), s, 0);
  CHECK(got == doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-13));
  const double step = 1e-5;
  CorrelationSpec lo = s, hi = s;
  lo.phi[0] -= step;
  hi.phi[0] += step;
  const double fd = (corr_eval(vec1(1.0), hi) - corr_eval(vec1(1.0), lo)) / (2 * step);
  CHECK(got == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("matern05 phi gradient matches finite differences at a fixed point") {
  const CorrelationSpec s = corr(CorrFamily::Matern05, {2.0});
  const Vec h = vec1(0.3);
  const double step = 1e-5;
  CorrelationSpec lo = s, hi = s;
  lo.phi[0] -= step;
  hi.phi[0] += step;
  const double fd = (corr_eval(h, hi) - corr_eval(h, lo)) / (2 * step);
  CHECK(std::abs(corr_grad_phi(h, s, 0) - fd) < 1e-6);
}

TEST_CASE("phi gradients match finite differences across families") {
  Rng rng(13);
  const double step = 1e-6;
  for (CorrFamily fam : kFamilies) {
    for (int rep = 0; rep < 30; ++rep) {
      const int d = 1 + rng.uniform_int(3);
      CorrelationSpec s;
      s.family = fam;
      s.phi = Vec(d);
      Vec h(d);
      for (int r = 0; r < d; ++r) {
        s.phi[r] = std::exp(rng.uniform(-1.5, 1.5));
        h[r] = rng.uniform(-1.0, 1.0);
        if (std::abs(h[r]) < 0.05) h[r] = 0.05;  // keep clear of the kink
      }
      for (int i = 0; i < d; ++i) {
        CorrelationSpec lo = s, hi = s;
        lo.phi[i] -= step;
        hi.phi[i] += step;
        const double fd = (corr_eval(h, hi) - corr_eval(h, lo)) / (2 * step);
        const double an = corr_grad_phi(h, s, i);
        CHECK(an == doctest::Approx(fd).epsilon(5e-5));
      }
    }
  }
}

TEST_CASE("fidelity kernel vanishes when either argument is zero") {
  Rng rng(14);
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 1 + rng.uniform_int(2);
    FidelityKernelSpec s;
    s.gamma = rng.uniform(0.05, 0.95);
    s.scale_a = Vec(m);
    s.exponents_l = Vec(m);
    Vec t(m);
    for (int j = 0; j < m; ++j) {
      s.scale_a[j] = std::exp(rng.uniform(-1.0, 1.0));
      s.exponents_l[j] = 1.0 + rng.uniform_int(6);
      t[j] = rng.uniform(0.0, 1.0);
    }
    CHECK(fidelity_cov(Vec::Zero(m), Vec::Zero(m), s) == 0.0);
    CHECK(fidelity_cov(t, Vec::Zero(m), s) == 0.0);
    CHECK(fidelity_cov(Vec::Zero(m), t, s) == 0.0);
  }
}

TEST_CASE("gamma one half with unit scale reduces to the min kernel") {
  const FidelityKernelSpec s = fidelity(0.5, {1.0}, {4.0});
  CHECK(fidelity_cov(vec1(0.5), vec1(1.0), s) == doctest::Approx(0.0625).epsilon(1e-14));

  Rng rng(15);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    FidelityKernelSpec sr = fidelity(0.5, {1.0}, {1.0 + rng.uniform_int(8)});
    const double t1 = rng.uniform(), t2 = rng.uniform();
    const double want = std::min(std::pow(t1, sr.exponents_l[0]), std::pow(t2, sr.exponents_l[0]));
    worst = std::max(worst,
                     std::abs(fidelity_cov(vec1(t1), vec1(t2), sr) - want));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("fidelity kernel diagonal is the scaled power norm") {
  Rng rng(16);
  for (int rep = 0; rep < 30; ++rep) {
    const double gamma = rng.uniform(0.05, 0.95);
    const double t = rng.uniform(0.05, 1.0);
    const FidelityKernelSpec s = fidelity(gamma, {1.0}, {4.0});
    CHECK(fidelity_cov(vec1(t), vec1(t), s) ==
          doctest::Approx(std::pow(t, 4.0)).epsilon(1e-12));
  }
  // m = 2: diagonal is the (1/gamma)-norm of (a_j t_j^{l_j})
  const FidelityKernelSpec s2 = fidelity(0.25, {1.0, 2.0}, {4.0, 2.0});
  const Vec t = vec2(0.6, 0.3);
  const double u1 = std::pow(0.6, 4.0), u2 = 2.0 * std::pow(0.3, 2.0);
  const double want = std::pow(std::pow(u1, 4.0) + std::pow(u2, 4.0), 0.25);
  CHECK(fidelity_cov(t, t, s2) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("fidelity kernel is symmetric and nonnegative") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 1 + rng.uniform_int(2);
    FidelityKernelSpec s;
    s.gamma = rng.uniform(0.02, 0.98);
    s.scale_a = Vec(m);
    s.exponents_l = Vec(m);
    Vec t1(m), t2(m);
    for (int j = 0; j < m; ++j) {
      s.scale_a[j] = std::exp(rng.uniform(-2.0, 2.0));
      s.exponents_l[j] = 1.0 + rng.uniform_int(6);
      t1[j] = rng.uniform();
      t2[j] = rng.uniform();
    }
    const double v12 = fidelity_cov(t1, t2, s);
    const double v21 = fidelity_cov(t2, t1, s);
    CHECK(v12 == doctest::Approx(v21).epsilon(1e-13));
    CHECK(v12 >= 0.0);
  }
}

TEST_CASE("fidelity kernel survives extreme roughness exponents") {
  // 1/gamma up to 100: the per-sum max scaling must avoid overflow and
  // keep the dominant term.
  const FidelityKernelSpec s = fidelity(0.01, {1.0}, {4.0});
  const double v = fidelity_cov(vec1(0.9), vec1(0.8), s);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  CHECK(v <= std::pow(0.9, 4.0) + 1e-12);
  const FidelityKernelSpec s99 = fidelity(0.99, {3.0}, {2.0});
  CHECK(std::isfinite(fidelity_cov(vec1(1e-8), vec1(0.5), s99)));
}

TEST_CASE("gamma gradient matches finite differences") {
  {  // fixed point from the written contract
    const FidelityKernelSpec s = fidelity(0.5, {1.0}, {4.0});
    const Vec t1 = vec1(0.5), t2 = vec1(0.8);
    const double step = 1e-5;
    FidelityKernelSpec lo = s, hi = s;
    lo.gamma -= step;
    hi.gamma += step;
    const double fd =
        (fidelity_cov(t1, t2, hi) - fidelity_cov(t1, t2, lo)) / (2 * step);
    CHECK(std::abs(fidelity_cov_grad_gamma(t1, t2, s) - fd) < 1e-6);
  }
  Rng rng(18);
  for (int rep = 0; rep < 60; ++rep) {
    const int m = 1 + rng.uniform_int(2);
    FidelityKernelSpec s;
    s.gamma = rng.uniform(0.1, 0.9);
    s.scale_a = Vec(m);
    s.exponents_l = Vec(m);
    Vec t1(m), t2(m);
    for (int j = 0; j < m; ++j) {
      s.scale_a[j] = std::exp(rng.uniform(-1.0, 1.0));
      s.exponents_l[j] = 1.0 + rng.uniform_int(4);
      t1[j] = rng.uniform(0.05, 1.0);
      t2[j] = rng.uniform(0.05, 1.0);
    }
    const double step = 1e-6;
    FidelityKernelSpec lo = s, hi = s;
    lo.gamma -= step;
    hi.gamma += step;
    const double fd =
        (fidelity_cov(t1, t2, hi) - fidelity_cov(t1, t2, lo)) / (2 * step);
    CHECK(fidelity_cov_grad_gamma(t1, t2, s) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("scale gradient matches finite differences") {
  {  // m = 2 hand-set point
    const FidelityKernelSpec s = fidelity(0.3, {1.0, 2.0}, {4.0, 2.0});
    const Vec t1 = vec2(0.5, 0.4), t2 = vec2(0.7, 0.9);
    const double step = 1e-5;
    FidelityKernelSpec lo = s, hi = s;
    lo.scale_a[0] -= step;
    hi.scale_a[0] += step;
    const double fd =
        (fidelity_cov(t1, t2, hi) - fidelity_cov(t1, t2, lo)) / (2 * step);
    CHECK(std::abs(fidelity_cov_grad_a(t1, t2, s, 0) - fd) < 1e-6);
  }
  Rng rng(19);
  for (int rep = 0; rep < 60; ++rep) {
    const int m = 1 + rng.uniform_int(2);
    FidelityKernelSpec s;
    s.gamma = rng.uniform(0.1, 0.9);
    s.scale_a = Vec(m);
    s.exponents_l = Vec(m);
    Vec t1(m), t2(m);
    for (int j = 0; j < m; ++j) {
      s.scale_a[j] = std::exp(rng.uniform(-1.0, 1.0));
      s.exponents_l[j] = 1.0 + rng.uniform_int(4);
      t1[j] = rng.uniform(0.05, 1.0);
      t2[j] = rng.uniform(0.05, 1.0);
    }
    for (int j = 0; j < m; ++j) {
      const double step = 1e-6 * s.scale_a[j];
      FidelityKernelSpec lo = s, hi = s;
      lo.scale_a[j] -= step;
      hi.scale_a[j] += step;
      const double fd =
          (fidelity_cov(t1, t2, hi) - fidelity_cov(t1, t2, lo)) / (2 * step);
      CHECK(fidelity_cov_grad_a(t1, t2, s, j) == doctest::Approx(fd).epsilon(2e-5));
    }
  }
}

TEST_CASE("combined covariance slices") {
  CombinedCovSpec spec;
  spec.sigma2 = 2.5;
  spec.corr_phi1 = corr(CorrFamily::Gaussian, {1.2});
  spec.corr_phi2 = corr(CorrFamily::Matern15, {3.0});
  spec.fidelity = fidelity(0.4, {1.0}, {4.0});

  const Vec x = vec1(0.3), xp = vec1(0.8);
  // zero-fidelity diagonal
  CHECK(combined_cov(x, vec1(0.0), x, vec1(0.0), spec) ==
        doctest::Approx(2.5).epsilon(1e-14));
  // same point, same positive fidelity: sigma2 (1 + t^4) once a = 1
  const double t = 0.6;
  CHECK(combined_cov(x, vec1(t), x, vec1(t), spec) ==
        doctest::Approx(2.5 * (1.0 + std::pow(t, 4.0))).epsilon(1e-13));
  // cross covariance to the zero-fidelity slice drops the error term entirely
  const double want = 2.5 * corr_eval(vec1(0.3 - 0.8), spec.corr_phi1);
  CHECK(combined_cov(x, vec1(0.7), xp, vec1(0.0), spec) ==
        doctest::Approx(want).epsilon(1e-14));
  CHECK(combined_cov(x, vec1(0.2), xp, vec1(0.0), spec) ==
        doctest::Approx(want).epsilon(1e-14));  // independent of t1
}

TEST_CASE("covariance matrix agrees with pairwise evaluation") {
  CombinedCovSpec spec;
  spec.sigma2 = 1.7;
  spec.corr_phi1 = corr(CorrFamily::Matern25, {0.9});
  spec.corr_phi2 = corr(CorrFamily::Gaussian, {2.0});
  spec.fidelity = fidelity(0.35, {1.3}, {4.0});

  Mat X(3, 1), T(3, 1);
  X << 0.1, 0.55, 0.9;
  T << 0.3, 0.7, 1.0;
  const CovParts parts = combined_cov_matrix(X, T, spec);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double want =
          combined_cov(X.row(i), T.row(i), X.row(j), T.row(j), spec) / spec.sigma2;
      CHECK(parts.K0(i, j) == doctest::Approx(want).epsilon(1e-14));
    }
  }
  // cross-covariance vector against a fresh point
  const Vec x = vec1(0.42), tq = vec1(0.16);
  const Vec k0 = combined_cov_vector(X, T, x, tq, spec);
  for (int i = 0; i < 3; ++i) {
    const double want = combined_cov(x, tq, X.row(i), T.row(i), spec) / spec.sigma2;
    CHECK(k0[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("covariance matrix gradient matches entrywise finite differences") {
  Rng rng(21);
  CombinedCovSpec spec;
  spec.sigma2 = 1.0;
  spec.corr_phi1 = corr(CorrFamily::Matern15, {0.8, 1.4});
  spec.corr_phi2 = corr(CorrFamily::Gaussian, {1.1, 0.6});
  spec.fidelity = fidelity(0.45, {0.9}, {4.0});

  const int n = 5;
  Mat X(n, 2), T(n, 1);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform();
    X(i, 1) = rng.uniform();
    T(i, 0) = rng.uniform(0.1, 1.0);
  }
  const CovParts parts = combined_cov_matrix(X, T, spec);
  const KernelParamIndex idx{2, 1};
  const double step = 1e-6;
  for (int k = 0; k < idx.count(); ++k) {
    CombinedCovSpec lo = spec, hi = spec;
    if (idx.is_phi1(k)) {
      lo.corr_phi1.phi[idx.phi1_dim(k)] -= step;
      hi.corr_phi1.phi[idx.phi1_dim(k)] += step;
    } else if (idx.is_phi2(k)) {
      lo.corr_phi2.phi[idx.phi2_dim(k)] -= step;
      hi.corr_phi2.phi[idx.phi2_dim(k)] += step;
    } else if (idx.is_a(k)) {
      lo.fidelity.scale_a[idx.a_dim(k)] -= step;
      hi.fidelity.scale_a[idx.a_dim(k)] += step;
    } else {
      lo.fidelity.gamma -= step;
      hi.fidelity.gamma += step;
    }
    const Mat fd = (combined_cov_matrix(X, T, hi).K0 - combined_cov_matrix(X, T, lo).K0) /
                   (2 * step);
    const Mat an = combined_cov_matrix_grad(X, T, spec, parts, k);
    CHECK((an - fd).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((an - an.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("kernel parameter indexing") {
  const KernelParamIndex idx{3, 2};
  CHECK(idx.count() == 9);
  CHECK(idx.is_phi1(0));
  CHECK(idx.is_phi1(2));
  CHECK(idx.is_phi2(3));
  CHECK(idx.phi2_dim(5) == 2);
  CHECK(idx.is_a(6));
  CHECK(idx.a_dim(7) == 1);
  CHECK(idx.is_gamma(8));
}

TEST_CASE("spec validation rejects bad parameters") {
  CombinedCovSpec spec;
  spec.sigma2 = 1.0;
  spec.corr_phi1 = corr(CorrFamily::Gaussian, {1.0});
  spec.corr_phi2 = corr(CorrFamily::Gaussian, {1.0});
  spec.fidelity = fidelity(0.5, {1.0}, {4.0});
  CHECK_NOTHROW(spec.validate());

  CombinedCovSpec bad = spec;
  bad.fidelity.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.corr_phi1.phi[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.sigma2 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.corr_phi2.phi = vec2(1.0, 2.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

}  // TEST_SUITE
