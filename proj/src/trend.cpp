#include "cfgp/trend.hpp"

#include <cmath>

namespace cfgp {

namespace {

std::vector<int> unit_exp(int d, int r, int power) {
  std::vector<int> e(d, 0);
  e[r] = power;
  return e;
}

}  // namespace

std::vector<MonomialPoly> basis_zero_fidelity_polys(const TrendBasis& basis, int d) {
  std::vector<MonomialPoly> cols;
  MonomialPoly one;
  one.terms.push_back({1.0, std::vector<int>(d, 0)});
  cols.push_back(one);

  if (basis.kind == TrendKind::LegendreQuadraticWithInteractions) {
    for (int r = 0; r < d; ++r) {  // 2x - 1
      MonomialPoly p;
      p.terms.push_back({2.0, unit_exp(d, r, 1)});
      p.terms.push_back({-1.0, std::vector<int>(d, 0)});
      cols.push_back(p);
    }
    for (int r = 0; r < d; ++r) {  // 6x^2 - 6x + 1
      MonomialPoly p;
      p.terms.push_back({6.0, unit_exp(d, r, 2)});
      p.terms.push_back({-6.0, unit_exp(d, r, 1)});
      p.terms.push_back({1.0, std::vector<int>(d, 0)});
      cols.push_back(p);
    }
    for (int i = 0; i < d; ++i) {  // (2x_i - 1)(2x_j - 1)
      for (int j = i + 1; j < d; ++j) {
        MonomialPoly p;
        std::vector<int> e(d, 0);
        e[i] = 1; e[j] = 1;
        p.terms.push_back({4.0, e});
        p.terms.push_back({-2.0, unit_exp(d, i, 1)});
        p.terms.push_back({-2.0, unit_exp(d, j, 1)});
        p.terms.push_back({1.0, std::vector<int>(d, 0)});
        cols.push_back(p);
      }
    }
  }

  if (basis.include_fidelity_trend) cols.push_back(MonomialPoly{});  // 0 at t = 0
  return cols;
}

Vec trend_eval(const Vec& x, const Vec& t, const TrendBasis& basis, const Vec& exponents_l) {
  const int d = static_cast<int>(x.size());
  if (!x.allFinite() || (x.array() < 0.0).any() || (x.array() > 1.0).any())
    throw std::invalid_argument("trend evaluation requires x inside the unit cube");
  Vec f(basis.column_count(d));
  int c = 0;
  f[c++] = 1.0;
  if (basis.kind == TrendKind::LegendreQuadraticWithInteractions) {
    for (int r = 0; r < d; ++r) f[c++] = 2.0 * x[r] - 1.0;
    for (int r = 0; r < d; ++r) {
      const double z = 2.0 * x[r] - 1.0;
      f[c++] = 0.5 * (3.0 * z * z - 1.0);
    }
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        f[c++] = (2.0 * x[i] - 1.0) * (2.0 * x[j] - 1.0);
  }
  if (basis.include_fidelity_trend) {
    if (t.size() != exponents_l.size())
      throw std::invalid_argument("fidelity trend needs matching t and exponent sizes");
    double v = 1.0;
    for (int j = 0; j < t.size(); ++j) v *= std::pow(t[j], exponents_l[j]);
    f[c++] = v;
  }
  return f;
}

Mat trend_matrix(const Mat& X, const Mat& T, const TrendBasis& basis, const Vec& exponents_l) {
  const int n = static_cast<int>(X.rows());
  const int p = basis.column_count(static_cast<int>(X.cols()));
  Mat F(n, p);
  for (int i = 0; i < n; ++i)
    F.row(i) =
        trend_eval(X.row(i).transpose(), T.row(i).transpose(), basis, exponents_l).transpose();
  return F;
}

}  // namespace cfgp
