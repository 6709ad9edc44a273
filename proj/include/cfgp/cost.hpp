#pragma once

#include "cfgp/types.hpp"

namespace cfgp {

/// Evaluation cost as a function of the fidelity vector.  All forms are
/// nonincreasing power laws in each coordinate, so cheaper always means
/// coarser.  Exponents equal to zero give a constant cost.
struct CostModel {
  enum class Kind { PowerSingle, ParamSingle, ParamDouble };

  Kind kind = Kind::PowerSingle;
  double b = 1.0;                 // prefactor (ParamSingle / ParamDouble)
  double c = 2.0;                 // exponent for PowerSingle
  double a1 = 2.0;                // first exponent (ParamSingle / ParamDouble)
  double a2 = 2.0;                // second exponent (ParamDouble)

  static CostModel power_single(double c) {
    CostModel m;
    m.kind = Kind::PowerSingle;
    m.c = c;
    return m;
  }
  static CostModel param_single(double a, double b) {
    CostModel m;
    m.kind = Kind::ParamSingle;
    m.a1 = a;
    m.b = b;
    return m;
  }
  static CostModel param_double(double a1, double a2, double b) {
    CostModel m;
    m.kind = Kind::ParamDouble;
    m.a1 = a1;
    m.a2 = a2;
    m.b = b;
    return m;
  }

  int fidelity_dim() const { return kind == Kind::ParamDouble ? 2 : 1; }

  bool is_constant() const {
    switch (kind) {
      case Kind::PowerSingle: return c == 0.0;
      case Kind::ParamSingle: return a1 == 0.0;
      case Kind::ParamDouble: return a1 == 0.0 && a2 == 0.0;
    }
    return false;
  }

  void validate() const {
    const bool expo_ok = kind == Kind::PowerSingle ? c >= 0.0
                         : kind == Kind::ParamSingle ? a1 >= 0.0
                                                     : (a1 >= 0.0 && a2 >= 0.0);
    if (!expo_ok) throw config_error("cost model exponents must be nonnegative");
    if (kind != Kind::PowerSingle && !(b > 0.0))
      throw config_error("cost model prefactor must be positive");
  }

  double eval(const Vec& t) const {
    if (t.size() != fidelity_dim())
      throw config_error("cost model: fidelity dimension mismatch");
    for (int j = 0; j < t.size(); ++j)
      if (!(t[j] > 0.0)) throw config_error("cost model: fidelity must be positive");
    switch (kind) {
      case Kind::PowerSingle: return std::pow(t[0], -c);
      case Kind::ParamSingle: return b * std::pow(t[0], -a1);
      case Kind::ParamDouble: return b * std::pow(t[0], -a1) * std::pow(t[1], -a2);
    }
    return 1.0;
  }
};

}  // namespace cfgp
