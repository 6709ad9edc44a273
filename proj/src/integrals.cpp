#include "cfgp/integrals.hpp"

#include <numeric>
#include <vector>

namespace cfgp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;
constexpr double kSqrtPi = 1.7724538509055160;

// Ascending-coefficient polynomials; everything here has degree <= 8.
using Poly = std::vector<double>;

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

// p(c0 + c1 w) expanded in powers of w
Poly poly_compose_linear(const Poly& p, double c0, double c1) {
  Poly r(p.size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    double c1k = 1.0;
    for (std::size_t k = 0; k <= j; ++k) {
      r[k] += p[j] * binom(static_cast<int>(j), static_cast<int>(k)) *
              std::pow(c0, static_cast<double>(j - k)) * c1k;
      c1k *= c1;
    }
  }
  return r;
}

// (c0 + c1 w)^e
Poly poly_pow_linear(double c0, double c1, int e) {
  Poly r(e + 1, 0.0);
  double c1k = 1.0;
  for (int k = 0; k <= e; ++k) {
    r[k] = binom(e, k) * std::pow(c0, static_cast<double>(e - k)) * c1k;
    c1k *= c1;
  }
  return r;
}

// Matern kernels in normalized form R(h) = e^{-w} ptilde(w), w = s |h|.
double matern_rate(CorrFamily family, double phi) {
  switch (family) {
    case CorrFamily::Matern05: return phi;
    case CorrFamily::Matern15: return kSqrt3 * phi;
    case CorrFamily::Matern25: return kSqrt5 * phi;
    default: throw config_error("matern_rate: not a Matern family");
  }
}

Poly matern_poly(CorrFamily family) {
  switch (family) {
    case CorrFamily::Matern05: return {1.0};
    case CorrFamily::Matern15: return {1.0, 1.0};
    case CorrFamily::Matern25: return {1.0, 1.0, 1.0 / 3.0};
    default: throw config_error("matern_poly: not a Matern family");
  }
}

double ek_weighted_sum(const Poly& beta, double z) {
  double acc = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k)
    if (beta[k] != 0.0) acc += beta[k] * ek_integral(static_cast<int>(k), z);
  return acc;
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw config_error(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

double ek_integral(int k, double z) {
  if (k < 0 || k > 12) throw config_error("ek_integral: order must be in [0, 12]");
  if (!(z >= 0.0)) throw config_error("ek_integral: z must be nonnegative");
  if (z == 0.0) return 0.0;
  if (z < 2.0) {
    // E_k(z) = z^{k+1} sum_m (-z)^m / (m! (k+m+1)); alternating, fast decay
    double sum = 0.0;
    double term = 1.0;  // (-z)^m / m!
    for (int m = 0; m < 60; ++m) {
      const double contrib = term / (k + m + 1);
      sum += contrib;
      if (std::abs(contrib) < 1e-18 * std::abs(sum) && m > 2) break;
      term *= -z / (m + 1);
    }
    return std::pow(z, k + 1) * sum;
  }
  // forward recurrence E_k = k E_{k-1} - z^k e^{-z}; all terms positive, stable
  const double ez = std::exp(-z);
  double e = 1.0 - ez;  // E_0
  double zk = 1.0;
  for (int j = 1; j <= k; ++j) {
    zk *= z;
    e = j * e - zk * ez;
  }
  return e;
}

double corr_moment(CorrFamily family, double phi, int q, double x) {
  if (q < 1 || q > 5) throw config_error("corr_moment: q must be in [1, 5]");
  if (!(phi > 0.0)) throw config_error("corr_moment: phi must be positive");
  check_unit(x, "corr_moment: x");

  if (family == CorrFamily::Gaussian) {
    // base case by error functions, then the integration-by-parts recurrence
    // I^(q+1) = x I^(q) + (q-1)/(2 phi^2) I^(q-1)
    //           - (1/(2 phi^2)) [u^{q-1} e^{-phi^2 (u-x)^2}]_0^1
    const double p2 = phi * phi;
    const double e0 = std::exp(-p2 * x * x);
    const double e1 = std::exp(-p2 * (1.0 - x) * (1.0 - x));
    double prev = 0.0;
    double cur = kSqrtPi / (2.0 * phi) * (std::erf(phi * (1.0 - x)) + std::erf(phi * x));
    for (int qq = 1; qq < q; ++qq) {
      // boundary term [u^{qq-1} e^{-phi^2(u-x)^2}]_0^1
      const double bnd = e1 - (qq == 1 ? e0 : 0.0);
      double next = x * cur + (qq - 1) / (2.0 * p2) * prev - bnd / (2.0 * p2);
      prev = cur;
      cur = next;
    }
    return cur;
  }

  const double s = matern_rate(family, phi);
  const Poly pt = matern_poly(family);
  // left of x: u = x - w/s, w = s(x-u) in [0, s x]
  const Poly beta_a = poly_mul(poly_pow_linear(x, -1.0 / s, q - 1), pt);
  // right of x: u = x + w/s, w = s(u-x) in [0, s(1-x)]
  const Poly beta_b = poly_mul(poly_pow_linear(x, 1.0 / s, q - 1), pt);
  return (ek_weighted_sum(beta_a, s * x) + ek_weighted_sum(beta_b, s * (1.0 - x))) / s;
}

double corr_product_integral(CorrFamily family, double phi, double y, double z) {
  if (!(phi > 0.0)) throw config_error("corr_product_integral: phi must be positive");
  check_unit(y, "corr_product_integral: y");
  check_unit(z, "corr_product_integral: z");
  if (y > z) std::swap(y, z);

  if (family == CorrFamily::Gaussian) {
    const double c = 0.5 * (y + z);
    const double sep = std::exp(-0.5 * phi * phi * (y - z) * (y - z));
    const double sq2p = std::sqrt(2.0) * phi;
    return sep * kSqrtPi / (2.0 * sq2p) *
           (std::erf(sq2p * (1.0 - c)) + std::erf(sq2p * c));
  }

  const double s = matern_rate(family, phi);
  const Poly pt = matern_poly(family);
  const double delta = z - y;
  const double sd = s * delta;

  // outer segments [0, y] and [z, 1]: both arguments move together; with
  // w the doubled distance to the nearer point the integrand becomes
  // e^{-s delta} e^{-w} ptilde(w/2) ptilde(s delta + w/2)
  const Poly beta =
      poly_mul(poly_compose_linear(pt, 0.0, 0.5), poly_compose_linear(pt, sd, 0.5));
  double acc =
      (ek_weighted_sum(beta, 2.0 * s * y) + ek_weighted_sum(beta, 2.0 * s * (1.0 - z))) /
      (2.0 * s);

  // middle segment [y, z]: exponent constant, pure polynomial in v = s(u-y)
  if (delta > 0.0) {
    const Poly mid = poly_mul(pt, poly_compose_linear(pt, sd, -1.0));
    double mi = 0.0;
    double pw = sd;
    for (std::size_t k = 0; k < mid.size(); ++k) {
      mi += mid[k] * pw / (k + 1);
      pw *= sd;
    }
    acc += mi / s;
  }
  return std::exp(-sd) * acc;
}

Mat w_matrix(const Mat& X, const CorrelationSpec& corr1, double sigma2) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  corr1.validate();
  if (corr1.dim() != d) throw config_error("correlation dimension mismatch");
  const double s4 = sigma2 * sigma2;
  Mat W(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double prod = s4;
      for (int r = 0; r < d; ++r)
        prod *= corr_product_integral(corr1.family, corr1.phi[r], X(i, r), X(j, r));
      W(i, j) = prod;
      W(j, i) = prod;
    }
  }
  return W;
}

Vec w_vector(const Mat& X, const Vec& xstar, const CorrelationSpec& corr1, double sigma2) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  corr1.validate();
  if (corr1.dim() != d) throw config_error("correlation dimension mismatch");
  if (xstar.size() != d) throw config_error("w_vector: dimension mismatch");
  const double s4 = sigma2 * sigma2;
  Vec w(n);
  for (int i = 0; i < n; ++i) {
    double prod = s4;
    for (int r = 0; r < d; ++r)
      prod *= corr_product_integral(corr1.family, corr1.phi[r], X(i, r), xstar[r]);
    w[i] = prod;
  }
  return w;
}

double w_scalar(const Vec& xstar, const CorrelationSpec& corr1, double sigma2) {
  const int d = static_cast<int>(xstar.size());
  corr1.validate();
  if (corr1.dim() != d) throw config_error("correlation dimension mismatch");
  double prod = sigma2 * sigma2;
  for (int r = 0; r < d; ++r)
    prod *= corr_product_integral(corr1.family, corr1.phi[r], xstar[r], xstar[r]);
  return prod;
}

namespace {

Vec h_row(const Vec& x, const std::vector<MonomialPoly>& polys,
          const CorrelationSpec& corr1, double sigma2, int d) {
  // per-dimension moment table: mom(r, e) = I^(e+1)(x_r)
  int max_e = 0;
  for (const MonomialPoly& p : polys)
    for (const MonomialPoly::Term& t : p.terms)
      for (int e : t.exp) max_e = std::max(max_e, e);
  Mat mom(d, max_e + 1);
  for (int r = 0; r < d; ++r)
    for (int e = 0; e <= max_e; ++e)
      mom(r, e) = corr_moment(corr1.family, corr1.phi[r], e + 1, x[r]);
  Vec row(static_cast<int>(polys.size()));
  for (std::size_t a = 0; a < polys.size(); ++a) {
    double acc = 0.0;
    for (const MonomialPoly::Term& t : polys[a].terms) {
      double prod = t.coef;
      for (int r = 0; r < d; ++r) prod *= mom(r, t.exp[r]);
      acc += prod;
    }
    row[static_cast<int>(a)] = sigma2 * acc;
  }
  return row;
}

}  // namespace

Mat h_matrix(const Mat& X, const TrendBasis& basis, const CorrelationSpec& corr1,
             double sigma2) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const std::vector<MonomialPoly> polys = basis_zero_fidelity_polys(basis, d);
  Mat H(n, static_cast<int>(polys.size()));
  for (int i = 0; i < n; ++i) H.row(i) = h_row(X.row(i), polys, corr1, sigma2, d).transpose();
  return H;
}

Vec h_vector(const Vec& xstar, const TrendBasis& basis, const CorrelationSpec& corr1,
             double sigma2) {
  const int d = static_cast<int>(xstar.size());
  return h_row(xstar, basis_zero_fidelity_polys(basis, d), corr1, sigma2, d);
}

namespace {

struct Frac {
  long long num = 0;
  long long den = 1;

  void reduce() {
    if (den < 0) { num = -num; den = -den; }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }
  static long long mul_checked(long long a, long long b) {
    const __int128 r = static_cast<__int128>(a) * b;
    if (r > static_cast<__int128>(4611686018427387903LL) ||
        r < -static_cast<__int128>(4611686018427387903LL))
      throw numerical_error("exact rational accumulation overflow");
    return static_cast<long long>(r);
  }
  void add(long long n2, long long d2) {
    const long long g = std::gcd(den, d2);
    const long long lcm = mul_checked(den / g, d2);
    num = mul_checked(num, lcm / den);
    num += mul_checked(n2, lcm / d2);
    den = lcm;
    reduce();
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace

Mat g_matrix(const TrendBasis& basis, int d) {
  const std::vector<MonomialPoly> polys = basis_zero_fidelity_polys(basis, d);
  const int p = static_cast<int>(polys.size());
  Mat G(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b <= a; ++b) {
      Frac acc;
      for (const MonomialPoly::Term& ta : polys[a].terms) {
        for (const MonomialPoly::Term& tb : polys[b].terms) {
          const long long ca = static_cast<long long>(std::llround(ta.coef));
          const long long cb = static_cast<long long>(std::llround(tb.coef));
          if (ta.coef != static_cast<double>(ca) || tb.coef != static_cast<double>(cb))
            throw numerical_error("g_matrix: basis coefficients must be integers");
          long long num = Frac::mul_checked(ca, cb);
          long long den = 1;
          for (int r = 0; r < d; ++r)
            den = Frac::mul_checked(den, ta.exp[r] + tb.exp[r] + 1);
          acc.add(num, den);
        }
      }
      G(a, b) = acc.value();
      G(b, a) = G(a, b);
    }
  }
  return G;
}

}  // namespace cfgp
