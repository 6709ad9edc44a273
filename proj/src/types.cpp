#include "cfgp/types.hpp"

#include <cmath>

namespace cfgp {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

const char* to_string(CorrFamily family) {
  switch (family) {
    case CorrFamily::Gaussian: return "gaussian";
    case CorrFamily::Matern05: return "matern05";
    case CorrFamily::Matern15: return "matern15";
    case CorrFamily::Matern25: return "matern25";
  }
  return "unknown";
}

CorrFamily corr_family_from_string(const std::string& name) {
  if (name == "gaussian") return CorrFamily::Gaussian;
  if (name == "matern05") return CorrFamily::Matern05;
  if (name == "matern15") return CorrFamily::Matern15;
  if (name == "matern25") return CorrFamily::Matern25;
  throw std::invalid_argument("unknown correlation family: " + name);
}

const char* to_string(TrendKind kind) {
  switch (kind) {
    case TrendKind::Constant: return "constant";
    case TrendKind::LegendreQuadraticWithInteractions: return "legendre2";
  }
  return "unknown";
}

TrendKind trend_kind_from_string(const std::string& name) {
  if (name == "constant") return TrendKind::Constant;
  if (name == "legendre2") return TrendKind::LegendreQuadraticWithInteractions;
  throw std::invalid_argument("unknown trend basis kind: " + name);
}

void CorrelationSpec::validate() const {
  if (phi.size() == 0) throw std::invalid_argument("correlation spec has no dimensions");
  if (!all_finite(phi) || (phi.array() <= 0.0).any())
    throw std::invalid_argument("correlation parameters phi must be finite and positive");
}

void FidelityKernelSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("fidelity kernel gamma must lie in (0,1)");
  if (scale_a.size() == 0 || scale_a.size() != exponents_l.size())
    throw std::invalid_argument("fidelity kernel scale/exponent sizes disagree");
  if (!all_finite(scale_a) || (scale_a.array() <= 0.0).any())
    throw std::invalid_argument("fidelity kernel scales a_j must be finite and positive");
  if (!all_finite(exponents_l) || (exponents_l.array() <= 0.0).any())
    throw std::invalid_argument("fidelity kernel exponents l_j must be finite and positive");
}

void CombinedCovSpec::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("sigma2 must be finite and positive");
  corr_phi1.validate();
  corr_phi2.validate();
  fidelity.validate();
  if (corr_phi1.dim() != corr_phi2.dim())
    throw std::invalid_argument("corr_phi1 and corr_phi2 input dimensions disagree");
}

void Dataset::validate() const {
  const int nn = n();
  if (nn < 1) throw std::invalid_argument("dataset must hold at least one row");
  if (X.rows() != nn || T.rows() != nn)
    throw std::invalid_argument("dataset row counts disagree");
  if (X.cols() < 1 || T.cols() < 1)
    throw std::invalid_argument("dataset needs at least one input and one fidelity column");
  if (!X.allFinite() || !T.allFinite() || !y.allFinite())
    throw std::invalid_argument("dataset contains non-finite values");
  if ((X.array() < 0.0).any() || (X.array() > 1.0).any())
    throw std::invalid_argument("inputs must lie inside the unit cube");
  if ((T.array() <= 0.0).any())
    throw std::invalid_argument("fidelity components must be strictly positive");
  for (int i = 0; i < nn; ++i) {
    for (int j = i + 1; j < nn; ++j) {
      if ((X.row(i).array() == X.row(j).array()).all() &&
          (T.row(i).array() == T.row(j).array()).all()) {
        throw std::invalid_argument(
            "duplicate (x,t) rows " + std::to_string(i) + " and " + std::to_string(j) +
            ": the model is noiseless and duplicates make the covariance singular");
      }
    }
  }
}

Dataset Dataset::with_row_appended(const Vec& x, const Vec& t, double ynew) const {
  if (x.size() != d() || t.size() != m())
    throw std::invalid_argument("appended row has wrong dimensions");
  Dataset out;
  out.X.resize(n() + 1, d());
  out.T.resize(n() + 1, m());
  out.y.resize(n() + 1);
  out.X << X, x.transpose();
  out.T << T, t.transpose();
  out.y << y, ynew;
  return out;
}

int TrendBasis::column_count(int d) const {
  int p = 0;
  switch (kind) {
    case TrendKind::Constant: p = 1; break;
    case TrendKind::LegendreQuadraticWithInteractions: p = 1 + 2 * d + d * (d - 1) / 2; break;
  }
  if (include_fidelity_trend) ++p;
  return p;
}

}  // namespace cfgp
