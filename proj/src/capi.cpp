// C boundary of the library.  Every entry point translates exceptions into
// error codes, keeps the message in a thread-local slot, and moves matrices
// across as dense row-major buffers.  Structured options come in as JSON;
// unknown keys are rejected so that typos fail loudly instead of silently
// falling back to defaults.

#include "cfgp.h"

#include "cfgp/active.hpp"
#include "cfgp/design.hpp"
#include "cfgp/imspe.hpp"
#include "cfgp/inference.hpp"
#include "cfgp/rng.hpp"
#include "cfgp/simulate.hpp"
#include "cfgp/validate.hpp"
#include "cfgp/version.hpp"

#include <json.hpp>

#include <cstring>
#include <memory>
#include <string>

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int translate_current_exception() {
  try {
    throw;
  } catch (const cfgp::config_error& e) {
    set_error(e.what());
    return CFGP_ECONFIG;
  } catch (const cfgp::numerical_error& e) {
    set_error(e.what());
    return CFGP_ENUMERIC;
  } catch (const cfgp::state_error& e) {
    set_error(e.what());
    return CFGP_ESTATE;
  } catch (const json::exception& e) {
    set_error(std::string("configuration JSON error: ") + e.what());
    return CFGP_ECONFIG;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return CFGP_EINVAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return CFGP_EINTERNAL;
  } catch (...) {
    set_error("unknown internal error");
    return CFGP_EINTERNAL;
  }
}

template <typename Fn>
int guarded(Fn&& fn) noexcept {
  try {
    return fn();
  } catch (...) {
    return translate_current_exception();
  }
}

int fail_invalid(const char* msg) {
  set_error(msg);
  return CFGP_EINVAL;
}

// ---- JSON plumbing --------------------------------------------------------

json parse_json_text(const char* text, const char* what) {
  if (text == nullptr) throw cfgp::config_error(std::string(what) + ": null configuration");
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw cfgp::config_error(std::string(what) + ": configuration is not valid JSON");
  return j;
}

void require_object(const json& j, const char* ctx) {
  if (!j.is_object()) throw cfgp::config_error(std::string(ctx) + ": expected a JSON object");
}

void check_keys(const json& j, const char* ctx, std::initializer_list<const char*> allowed) {
  require_object(j, ctx);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known)
      throw cfgp::config_error(std::string(ctx) + ": unknown configuration key \"" +
                               item.key() + "\"");
  }
}

double num_field(const json& j, const char* ctx, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number())
    throw cfgp::config_error(std::string(ctx) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

int int_field(const json& j, const char* ctx, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw cfgp::config_error(std::string(ctx) + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

bool bool_field(const json& j, const char* ctx, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean())
    throw cfgp::config_error(std::string(ctx) + ": \"" + key + "\" must be a boolean");
  return v.get<bool>();
}

std::uint64_t seed_field(const json& j, const char* ctx, const char* key,
                         std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0))
    throw cfgp::config_error(std::string(ctx) + ": \"" + key +
                             "\" must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string string_field(const json& j, const char* ctx, const char* key,
                         const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string())
    throw cfgp::config_error(std::string(ctx) + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

// Accepts a number (broadcast) or an array of length len; len < 0 accepts
// any nonempty array and infers the length from it.
cfgp::Vec vec_field(const json& j, const char* ctx, const char* key, int len,
                    const cfgp::Vec& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number()) {
    const int size = len < 0 ? 1 : len;
    return cfgp::Vec::Constant(size, v.get<double>());
  }
  if (v.is_array()) {
    if (v.empty())
      throw cfgp::config_error(std::string(ctx) + ": \"" + key + "\" must not be empty");
    if (len >= 0 && static_cast<int>(v.size()) != len)
      throw cfgp::config_error(std::string(ctx) + ": \"" + key + "\" must have length " +
                               std::to_string(len));
    cfgp::Vec out(static_cast<int>(v.size()));
    for (int i = 0; i < out.size(); ++i) {
      if (!v[i].is_number())
        throw cfgp::config_error(std::string(ctx) + ": \"" + key +
                                 "\" must contain only numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }
  throw cfgp::config_error(std::string(ctx) + ": \"" + key +
                           "\" must be a number or an array of numbers");
}

cfgp::CorrFamily family_field(const json& j, const char* ctx, const char* key,
                              cfgp::CorrFamily fallback) {
  const std::string name = string_field(j, ctx, key, cfgp::to_string(fallback));
  try {
    return cfgp::corr_family_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw cfgp::config_error(std::string(ctx) + ": " + e.what());
  }
}

// ---- section parsers --------------------------------------------------------

cfgp::CostModel parse_cost(const json& j) {
  static const char* ctx = "cost";
  check_keys(j, ctx, {"kind", "c", "a", "b", "a1", "a2"});
  const std::string kind = string_field(j, ctx, "kind", "power_single");
  cfgp::CostModel cost;
  if (kind == "power_single") {
    cost = cfgp::CostModel::power_single(num_field(j, ctx, "c", 2.0));
    if (j.contains("a") || j.contains("b") || j.contains("a1") || j.contains("a2"))
      throw cfgp::config_error("cost: power_single accepts only \"c\"");
  } else if (kind == "param_single") {
    cost = cfgp::CostModel::param_single(num_field(j, ctx, "a", 2.0),
                                         num_field(j, ctx, "b", 1.0));
    if (j.contains("c") || j.contains("a1") || j.contains("a2"))
      throw cfgp::config_error("cost: param_single accepts only \"a\" and \"b\"");
  } else if (kind == "param_double") {
    cost = cfgp::CostModel::param_double(num_field(j, ctx, "a1", 2.0),
                                         num_field(j, ctx, "a2", 2.0),
                                         num_field(j, ctx, "b", 1.0));
    if (j.contains("c") || j.contains("a"))
      throw cfgp::config_error("cost: param_double accepts \"a1\", \"a2\" and \"b\"");
  } else {
    throw cfgp::config_error("cost: unknown kind \"" + kind + "\"");
  }
  cost.validate();
  return cost;
}

cfgp::TrendBasis parse_basis(const json& j) {
  static const char* ctx = "basis";
  check_keys(j, ctx, {"kind", "include_fidelity_trend"});
  cfgp::TrendBasis basis;
  const std::string kind = string_field(j, ctx, "kind", "constant");
  try {
    basis.kind = cfgp::trend_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw cfgp::config_error(std::string(ctx) + ": " + e.what());
  }
  basis.include_fidelity_trend = bool_field(j, ctx, "include_fidelity_trend", false);
  return basis;
}

cfgp::FitConfig parse_fit(const json& j, int m) {
  static const char* ctx = "fit";
  check_keys(j, ctx,
             {"n_starts", "max_iters", "grad_tol", "seed", "family1", "family2",
              "exponents_l", "fix_gamma", "gamma_lo", "gamma_hi"});
  cfgp::FitConfig fit;
  fit.n_starts = int_field(j, ctx, "n_starts", fit.n_starts);
  fit.max_iters = int_field(j, ctx, "max_iters", fit.max_iters);
  fit.grad_tol = num_field(j, ctx, "grad_tol", fit.grad_tol);
  fit.seed = seed_field(j, ctx, "seed", fit.seed);
  fit.family1 = family_field(j, ctx, "family1", fit.family1);
  fit.family2 = family_field(j, ctx, "family2", fit.family2);
  fit.exponents_l = vec_field(j, ctx, "exponents_l", m, cfgp::Vec());
  if (j.contains("fix_gamma") && !j.at("fix_gamma").is_null())
    fit.fix_gamma = num_field(j, ctx, "fix_gamma", 0.5);
  fit.gamma_lo = num_field(j, ctx, "gamma_lo", fit.gamma_lo);
  fit.gamma_hi = num_field(j, ctx, "gamma_hi", fit.gamma_hi);
  if (fit.n_starts < 1) throw cfgp::config_error("fit: n_starts must be at least 1");
  if (fit.max_iters < 1) throw cfgp::config_error("fit: max_iters must be at least 1");
  return fit;
}

cfgp::DesignRequest parse_design_request(const json& j, const char* ctx) {
  check_keys(j, ctx,
             {"kind", "d", "m", "t_lo", "t_hi", "seed", "budget", "n", "levels", "n0",
              "stack_size", "reps_per_loc", "n_loc"});
  cfgp::DesignRequest req;
  const std::string kind = string_field(j, ctx, "kind", "mmed");
  try {
    req.kind = cfgp::design_kind_from_string(kind);
  } catch (const std::exception& e) {
    throw cfgp::config_error(std::string(ctx) + ": " + e.what());
  }
  req.d = int_field(j, ctx, "d", req.d);
  req.m = int_field(j, ctx, "m", req.m);
  req.t_lo = vec_field(j, ctx, "t_lo", req.m, cfgp::Vec());
  req.t_hi = vec_field(j, ctx, "t_hi", req.m, cfgp::Vec());
  req.seed = seed_field(j, ctx, "seed", req.seed);
  req.budget = num_field(j, ctx, "budget", req.budget);
  req.n = int_field(j, ctx, "n", req.n);
  req.levels = int_field(j, ctx, "levels", req.levels);
  req.n0 = int_field(j, ctx, "n0", req.n0);
  req.stack_size = int_field(j, ctx, "stack_size", req.stack_size);
  req.reps_per_loc = int_field(j, ctx, "reps_per_loc", req.reps_per_loc);
  req.n_loc = int_field(j, ctx, "n_loc", req.n_loc);
  return req;
}

cfgp::SimulatorSpec parse_simulator(const json& j) {
  static const char* ctx = "simulator";
  check_keys(j, ctx, {"kind", "seed", "d", "m", "c", "exponents_l", "gp"});
  cfgp::SimulatorSpec spec;
  spec.kind = string_field(j, ctx, "kind", spec.kind);
  spec.seed = seed_field(j, ctx, "seed", spec.seed);
  spec.d = int_field(j, ctx, "d", spec.d);
  spec.m = int_field(j, ctx, "m", spec.m);
  spec.c = num_field(j, ctx, "c", spec.c);
  spec.exponents_l = vec_field(j, ctx, "exponents_l", spec.m, cfgp::Vec());
  if (spec.d < 1 || spec.m < 1)
    throw cfgp::config_error("simulator: d and m must be at least 1");

  cfgp::GpDrawParams gp;
  gp.d = spec.d;
  gp.m = spec.m;
  cfgp::CombinedCovSpec cov;
  cov.sigma2 = 1.0;
  cov.corr_phi1.family = cfgp::CorrFamily::Gaussian;
  cov.corr_phi1.phi = cfgp::Vec::Constant(spec.d, 1.0);
  cov.corr_phi2.family = cfgp::CorrFamily::Gaussian;
  cov.corr_phi2.phi = cfgp::Vec::Constant(spec.d, 1.0);
  cov.fidelity.gamma = 0.5;
  cov.fidelity.scale_a = cfgp::Vec::Constant(spec.m, 1.0);
  cov.fidelity.exponents_l = cfgp::Vec::Constant(spec.m, 4.0);
  if (j.contains("gp")) {
    const json& g = j.at("gp");
    static const char* gctx = "simulator.gp";
    check_keys(g, gctx,
               {"sigma2", "family1", "family2", "phi1", "phi2", "gamma", "a", "l", "nx",
                "nt", "t_max", "max_lattice"});
    cov.sigma2 = num_field(g, gctx, "sigma2", cov.sigma2);
    cov.corr_phi1.family = family_field(g, gctx, "family1", cov.corr_phi1.family);
    cov.corr_phi2.family = family_field(g, gctx, "family2", cov.corr_phi2.family);
    cov.corr_phi1.phi = vec_field(g, gctx, "phi1", spec.d, cov.corr_phi1.phi);
    cov.corr_phi2.phi = vec_field(g, gctx, "phi2", spec.d, cov.corr_phi2.phi);
    cov.fidelity.gamma = num_field(g, gctx, "gamma", cov.fidelity.gamma);
    cov.fidelity.scale_a = vec_field(g, gctx, "a", spec.m, cov.fidelity.scale_a);
    cov.fidelity.exponents_l = vec_field(g, gctx, "l", spec.m, cov.fidelity.exponents_l);
    gp.nx = int_field(g, gctx, "nx", gp.nx);
    gp.nt = int_field(g, gctx, "nt", gp.nt);
    gp.t_max = num_field(g, gctx, "t_max", gp.t_max);
    gp.max_lattice = int_field(g, gctx, "max_lattice", gp.max_lattice);
  }
  gp.spec = cov;
  spec.gp = gp;
  return spec;
}

void parse_criterion_knobs(const json& j, const char* ctx, cfgp::CriterionOptions& opts) {
  opts.n_probes = int_field(j, ctx, "n_probes", opts.n_probes);
  opts.n_starts = int_field(j, ctx, "n_starts", opts.n_starts);
  opts.max_iters = int_field(j, ctx, "max_iters", opts.max_iters);
  opts.fd_step_frac = num_field(j, ctx, "fd_step_frac", opts.fd_step_frac);
}

ordered_json params_to_json(const cfgp::HyperParams& hp) {
  auto vec_to_json = [](const cfgp::Vec& v) {
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };
  ordered_json p;
  p["sigma2"] = hp.sigma2;
  p["phi1"] = vec_to_json(hp.spec.corr_phi1.phi);
  p["phi2"] = vec_to_json(hp.spec.corr_phi2.phi);
  p["family1"] = cfgp::to_string(hp.spec.corr_phi1.family);
  p["family2"] = cfgp::to_string(hp.spec.corr_phi2.family);
  p["a"] = vec_to_json(hp.spec.fidelity.scale_a);
  p["gamma"] = hp.spec.fidelity.gamma;
  p["l"] = vec_to_json(hp.spec.fidelity.exponents_l);
  p["beta"] = vec_to_json(hp.beta);
  return p;
}

cfgp::Mat map_row_major(const double* buf, int rows, int cols) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMat>(buf, rows, cols);
}

void copy_row_major(const cfgp::Mat& src, double* dst) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMat>(dst, src.rows(), src.cols()) = src;
}

}  // namespace

// ---- handle definitions -----------------------------------------------------

struct cfgp_dataset {
  cfgp::Dataset data;
};

struct cfgp_design {
  cfgp::DesignPlan plan;
};

struct cfgp_model {
  cfgp::FittedModel model;
  std::string report_json;
};

struct cfgp_imspe {
  cfgp::ImspeState state;
};

struct cfgp_simulator {
  std::unique_ptr<cfgp::Simulator> sim;
};

// ---- basics -----------------------------------------------------------------

const char* cfgp_version(void) { return cfgp::kVersion; }

const char* cfgp_last_error(void) { return g_last_error.c_str(); }

void cfgp_string_free(char* s) { std::free(s); }

// ---- datasets ---------------------------------------------------------------

int cfgp_dataset_create(const double* X, const double* T, const double* y, int n, int d,
                        int m, cfgp_dataset** out) {
  if (out == nullptr) return fail_invalid("cfgp_dataset_create: out is null");
  *out = nullptr;
  if (X == nullptr || T == nullptr || y == nullptr)
    return fail_invalid("cfgp_dataset_create: data buffers must not be null");
  if (n < 1 || d < 1 || m < 1)
    return fail_invalid("cfgp_dataset_create: n, d and m must be at least 1");
  return guarded([&] {
    cfgp::Dataset data;
    data.X = map_row_major(X, n, d);
    data.T = map_row_major(T, n, m);
    data.y = Eigen::Map<const cfgp::Vec>(y, n);
    data.validate();
    *out = new cfgp_dataset{std::move(data)};
    return CFGP_OK;
  });
}

int cfgp_dataset_dims(const cfgp_dataset* data, int* n, int* d, int* m) {
  if (data == nullptr) return fail_invalid("cfgp_dataset_dims: data is null");
  if (n != nullptr) *n = data->data.n();
  if (d != nullptr) *d = data->data.d();
  if (m != nullptr) *m = data->data.m();
  return CFGP_OK;
}

int cfgp_dataset_get(const cfgp_dataset* data, double* X, double* T, double* y) {
  if (data == nullptr) return fail_invalid("cfgp_dataset_get: data is null");
  return guarded([&] {
    if (X != nullptr) copy_row_major(data->data.X, X);
    if (T != nullptr) copy_row_major(data->data.T, T);
    if (y != nullptr) Eigen::Map<cfgp::Vec>(y, data->data.n()) = data->data.y;
    return CFGP_OK;
  });
}

void cfgp_dataset_free(cfgp_dataset* data) { delete data; }

// ---- designs ----------------------------------------------------------------

int cfgp_design_generate(const char* config_json, cfgp_design** out) {
  if (out == nullptr) return fail_invalid("cfgp_design_generate: out is null");
  *out = nullptr;
  return guarded([&] {
    const json j = parse_json_text(config_json, "design config");
    check_keys(j, "design config", {"design", "cost"});
    if (!j.contains("design"))
      throw cfgp::config_error("design config: missing \"design\" section");
    const cfgp::DesignRequest req = parse_design_request(j.at("design"), "design");
    const cfgp::CostModel cost =
        j.contains("cost") ? parse_cost(j.at("cost")) : cfgp::CostModel::power_single(2.0);
    cfgp::DesignPlan plan = cfgp::generate_design(req, cost);
    *out = new cfgp_design{std::move(plan)};
    return CFGP_OK;
  });
}

int cfgp_design_dims(const cfgp_design* des, int* n, int* d, int* m) {
  if (des == nullptr) return fail_invalid("cfgp_design_dims: design is null");
  if (n != nullptr) *n = des->plan.n();
  if (d != nullptr) *d = des->plan.d();
  if (m != nullptr) *m = des->plan.m();
  return CFGP_OK;
}

int cfgp_design_get(const cfgp_design* des, double* X, double* T) {
  if (des == nullptr) return fail_invalid("cfgp_design_get: design is null");
  return guarded([&] {
    if (X != nullptr) copy_row_major(des->plan.X, X);
    if (T != nullptr && des->plan.m() > 0) copy_row_major(des->plan.T, T);
    return CFGP_OK;
  });
}

int cfgp_design_info(const cfgp_design* des, double* total_cost, char** notice) {
  if (des == nullptr) return fail_invalid("cfgp_design_info: design is null");
  if (total_cost != nullptr) *total_cost = des->plan.total_cost;
  if (notice != nullptr) {
    *notice = dup_string(des->plan.notice);
    if (*notice == nullptr) return fail_invalid("cfgp_design_info: allocation failed");
  }
  return CFGP_OK;
}

void cfgp_design_free(cfgp_design* des) { delete des; }

// ---- fitting ----------------------------------------------------------------

int cfgp_fit(const cfgp_dataset* data, const char* config_json, cfgp_model** out,
             char** report_json) {
  if (out == nullptr) return fail_invalid("cfgp_fit: out is null");
  *out = nullptr;
  if (report_json != nullptr) *report_json = nullptr;
  if (data == nullptr) return fail_invalid("cfgp_fit: data is null");
  return guarded([&] {
    const json j = parse_json_text(config_json, "fit config");
    check_keys(j, "fit config", {"basis", "fit"});
    const cfgp::TrendBasis basis =
        j.contains("basis") ? parse_basis(j.at("basis")) : cfgp::TrendBasis{};
    const cfgp::FitConfig fit =
        j.contains("fit") ? parse_fit(j.at("fit"), data->data.m()) : cfgp::FitConfig{};
    cfgp::FitReport report = cfgp::fit_mle(data->data, basis, fit);
    auto model = std::make_unique<cfgp_model>(
        cfgp_model{cfgp::FittedModel(data->data, basis, report.best.spec),
                   report.to_json()});
    if (report_json != nullptr) {
      *report_json = dup_string(model->report_json);
      if (*report_json == nullptr) throw std::bad_alloc();
    }
    *out = model.release();
    return CFGP_OK;
  });
}

int cfgp_model_create(const cfgp_dataset* data, const char* config_json,
                      cfgp_model** out) {
  if (out == nullptr) return fail_invalid("cfgp_model_create: out is null");
  *out = nullptr;
  if (data == nullptr) return fail_invalid("cfgp_model_create: data is null");
  return guarded([&] {
    const json j = parse_json_text(config_json, "model config");
    check_keys(j, "model config", {"basis", "params"});
    const cfgp::TrendBasis basis =
        j.contains("basis") ? parse_basis(j.at("basis")) : cfgp::TrendBasis{};
    if (!j.contains("params"))
      throw cfgp::config_error("model config: missing \"params\" section");
    const json& p = j.at("params");
    static const char* ctx = "params";
    check_keys(p, ctx,
               {"sigma2", "phi1", "phi2", "family1", "family2", "a", "gamma", "l"});
    const int d = data->data.d();
    const int m = data->data.m();
    cfgp::CombinedCovSpec spec;
    spec.corr_phi1.family = family_field(p, ctx, "family1", cfgp::CorrFamily::Gaussian);
    spec.corr_phi2.family = family_field(p, ctx, "family2", cfgp::CorrFamily::Gaussian);
    spec.corr_phi1.phi = vec_field(p, ctx, "phi1", d, cfgp::Vec::Constant(d, 1.0));
    spec.corr_phi2.phi = vec_field(p, ctx, "phi2", d, cfgp::Vec::Constant(d, 1.0));
    spec.fidelity.gamma = num_field(p, ctx, "gamma", 0.5);
    spec.fidelity.scale_a = vec_field(p, ctx, "a", m, cfgp::Vec::Constant(m, 1.0));
    spec.fidelity.exponents_l = vec_field(p, ctx, "l", m, cfgp::Vec::Constant(m, 4.0));
    const bool profile_sigma2 = !p.contains("sigma2");
    spec.sigma2 = num_field(p, ctx, "sigma2", 1.0);
    spec.validate();
    *out = new cfgp_model{
        cfgp::FittedModel(data->data, basis, spec, profile_sigma2), std::string()};
    return CFGP_OK;
  });
}

int cfgp_model_predict(const cfgp_model* model, const double* x, const double* t,
                       int n_points, double* mean, double* var) {
  if (model == nullptr) return fail_invalid("cfgp_model_predict: model is null");
  if (x == nullptr || t == nullptr || mean == nullptr)
    return fail_invalid("cfgp_model_predict: x, t and mean must not be null");
  if (n_points < 1) return fail_invalid("cfgp_model_predict: n_points must be positive");
  return guarded([&] {
    const int d = model->model.data().d();
    const int m = model->model.data().m();
    for (int i = 0; i < n_points; ++i) {
      const cfgp::Vec xi = Eigen::Map<const cfgp::Vec>(x + static_cast<std::ptrdiff_t>(i) * d, d);
      const cfgp::Vec ti = Eigen::Map<const cfgp::Vec>(t + static_cast<std::ptrdiff_t>(i) * m, m);
      double mu = 0.0, v = 0.0;
      model->model.posterior(xi, ti, mu, v);
      mean[i] = mu;
      if (var != nullptr) var[i] = v;
    }
    return CFGP_OK;
  });
}

int cfgp_model_params_json(const cfgp_model* model, char** out) {
  if (model == nullptr) return fail_invalid("cfgp_model_params_json: model is null");
  if (out == nullptr) return fail_invalid("cfgp_model_params_json: out is null");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(params_to_json(model->model.params()).dump());
    if (*out == nullptr) throw std::bad_alloc();
    return CFGP_OK;
  });
}

void cfgp_model_free(cfgp_model* model) { delete model; }

// ---- IMSPE ------------------------------------------------------------------

int cfgp_imspe_state_create(const cfgp_model* model, cfgp_imspe** out) {
  if (out == nullptr) return fail_invalid("cfgp_imspe_state_create: out is null");
  *out = nullptr;
  if (model == nullptr) return fail_invalid("cfgp_imspe_state_create: model is null");
  return guarded([&] {
    cfgp::CombinedCovSpec spec = model->model.params().spec;
    spec.sigma2 = model->model.sigma2();
    *out = new cfgp_imspe{
        cfgp::ImspeState(model->model.data(), model->model.basis(), spec)};
    return CFGP_OK;
  });
}

int cfgp_imspe_value(const cfgp_imspe* state, double* value) {
  if (state == nullptr) return fail_invalid("cfgp_imspe_value: state is null");
  if (value == nullptr) return fail_invalid("cfgp_imspe_value: value is null");
  *value = state->state.imspe();
  return CFGP_OK;
}

int cfgp_imspe_reduction(const cfgp_imspe* state, const double* x, const double* t,
                         double* reduction, int* degenerate) {
  if (state == nullptr) return fail_invalid("cfgp_imspe_reduction: state is null");
  if (x == nullptr || t == nullptr || reduction == nullptr)
    return fail_invalid("cfgp_imspe_reduction: x, t and reduction must not be null");
  return guarded([&] {
    const int d = state->state.data().d();
    const int m = state->state.data().m();
    const cfgp::Vec xi = Eigen::Map<const cfgp::Vec>(x, d);
    const cfgp::Vec ti = Eigen::Map<const cfgp::Vec>(t, m);
    const double r = state->state.reduction(xi, ti);
    *reduction = r;
    if (degenerate != nullptr) *degenerate = std::isinf(r) && r < 0.0 ? 1 : 0;
    return CFGP_OK;
  });
}

int cfgp_optimize_criterion(const cfgp_imspe* state, const char* cost_json,
                            const char* options_json, char** result_json) {
  if (state == nullptr) return fail_invalid("cfgp_optimize_criterion: state is null");
  if (result_json == nullptr)
    return fail_invalid("cfgp_optimize_criterion: result_json is null");
  *result_json = nullptr;
  return guarded([&] {
    const cfgp::CostModel cost = parse_cost(parse_json_text(cost_json, "cost"));
    const json j = parse_json_text(options_json, "criterion options");
    static const char* ctx = "criterion options";
    check_keys(j, ctx,
               {"t_lo", "t_hi", "seed", "n_probes", "n_starts", "max_iters",
                "fd_step_frac"});
    cfgp::CriterionOptions opts;
    const int m = state->state.data().m();
    opts.t_lo = vec_field(j, ctx, "t_lo", m, cfgp::Vec());
    opts.t_hi = vec_field(j, ctx, "t_hi", m, cfgp::Vec());
    if (opts.t_lo.size() == 0 || opts.t_hi.size() == 0)
      throw cfgp::config_error("criterion options: t_lo and t_hi are required");
    opts.seed = seed_field(j, ctx, "seed", opts.seed);
    parse_criterion_knobs(j, ctx, opts);
    const cfgp::CriterionResult res = cfgp::optimize_criterion(state->state, cost, opts);
    ordered_json out;
    out["found"] = res.found;
    ordered_json xs = ordered_json::array();
    for (int i = 0; i < res.x.size(); ++i) xs.push_back(res.x[i]);
    ordered_json ts = ordered_json::array();
    for (int i = 0; i < res.t.size(); ++i) ts.push_back(res.t[i]);
    out["x"] = xs;
    out["t"] = ts;
    out["reduction"] = res.reduction;
    out["cost"] = res.cost;
    out["value"] = res.value;
    *result_json = dup_string(out.dump());
    if (*result_json == nullptr) throw std::bad_alloc();
    return CFGP_OK;
  });
}

void cfgp_imspe_free(cfgp_imspe* state) { delete state; }

// ---- simulators and costs -----------------------------------------------------

int cfgp_simulator_create(const char* config_json, cfgp_simulator** out) {
  if (out == nullptr) return fail_invalid("cfgp_simulator_create: out is null");
  *out = nullptr;
  return guarded([&] {
    const cfgp::SimulatorSpec spec =
        parse_simulator(parse_json_text(config_json, "simulator config"));
    *out = new cfgp_simulator{cfgp::make_simulator(spec)};
    return CFGP_OK;
  });
}

int cfgp_simulator_dims(const cfgp_simulator* sim, int* d, int* m) {
  if (sim == nullptr) return fail_invalid("cfgp_simulator_dims: simulator is null");
  if (d != nullptr) *d = sim->sim->d();
  if (m != nullptr) *m = sim->sim->m();
  return CFGP_OK;
}

int cfgp_simulator_eval(const cfgp_simulator* sim, const double* x, const double* t,
                        double* y) {
  if (sim == nullptr) return fail_invalid("cfgp_simulator_eval: simulator is null");
  if (x == nullptr || y == nullptr)
    return fail_invalid("cfgp_simulator_eval: x and y must not be null");
  return guarded([&] {
    const cfgp::Vec xi = Eigen::Map<const cfgp::Vec>(x, sim->sim->d());
    cfgp::Vec ti = cfgp::Vec::Zero(sim->sim->m());
    if (t != nullptr) ti = Eigen::Map<const cfgp::Vec>(t, sim->sim->m());
    *y = sim->sim->eval(xi, ti);
    return CFGP_OK;
  });
}

void cfgp_simulator_free(cfgp_simulator* sim) { delete sim; }

int cfgp_cost_eval(const char* cost_json, const double* t, int m, double* out) {
  if (t == nullptr || out == nullptr)
    return fail_invalid("cfgp_cost_eval: t and out must not be null");
  if (m < 1) return fail_invalid("cfgp_cost_eval: m must be positive");
  return guarded([&] {
    const cfgp::CostModel cost = parse_cost(parse_json_text(cost_json, "cost"));
    if (cost.fidelity_dim() != m)
      throw cfgp::config_error("cfgp_cost_eval: cost model expects " +
                               std::to_string(cost.fidelity_dim()) +
                               " fidelity coordinates");
    *out = cost.eval(Eigen::Map<const cfgp::Vec>(t, m));
    return CFGP_OK;
  });
}

// ---- experiments ----------------------------------------------------------------

namespace {

cfgp::Mat build_eval_grid(const json& j, int d) {
  static const char* ctx = "eval_grid";
  check_keys(j, ctx, {"n", "seed"});
  const int n = int_field(j, ctx, "n", 200);
  if (n < 1) throw cfgp::config_error("eval_grid: n must be positive");
  const std::uint64_t seed = seed_field(j, ctx, "seed", 0x47524944ULL);
  return cfgp::Halton(d, seed).points(n);
}

}  // namespace

int cfgp_run_experiment(const char* config_json, cfgp_al_row_cb on_row, void* user,
                        char** summary_json, cfgp_dataset** final_data) {
  if (summary_json != nullptr) *summary_json = nullptr;
  if (final_data != nullptr) *final_data = nullptr;
  return guarded([&] {
    const json j = parse_json_text(config_json, "experiment config");
    static const char* ctx = "experiment config";
    check_keys(j, ctx,
               {"mode", "seed", "simulator", "cost", "total_budget", "initial_budget",
                "design", "basis", "fit", "criterion", "refit_every", "t_lo", "t_hi",
                "single_fidelity", "eval_grid"});
    const std::string mode = string_field(j, ctx, "mode", "al");
    if (mode != "al" && mode != "one_shot" && mode != "single_fidelity")
      throw cfgp::config_error("experiment config: mode must be al, one_shot or "
                               "single_fidelity");
    if (!j.contains("simulator"))
      throw cfgp::config_error("experiment config: missing \"simulator\" section");
    const std::uint64_t seed = seed_field(j, ctx, "seed", 1);
    const cfgp::SimulatorSpec simspec = parse_simulator(j.at("simulator"));
    auto sim = cfgp::make_simulator(simspec);
    const int d = sim->d();
    const int m = sim->m();
    const cfgp::CostModel cost =
        j.contains("cost") ? parse_cost(j.at("cost")) : cfgp::CostModel::power_single(2.0);
    const double total_budget = num_field(j, ctx, "total_budget", -1.0);
    const cfgp::TrendBasis basis =
        j.contains("basis") ? parse_basis(j.at("basis")) : cfgp::TrendBasis{};
    cfgp::FitConfig fit =
        j.contains("fit") ? parse_fit(j.at("fit"), m) : cfgp::FitConfig{};
    const cfgp::Vec t_lo = vec_field(j, ctx, "t_lo", m, cfgp::Vec());
    const cfgp::Vec t_hi = vec_field(j, ctx, "t_hi", m, cfgp::Vec());
    cfgp::Mat eval_grid;
    if (j.contains("eval_grid")) eval_grid = build_eval_grid(j.at("eval_grid"), d);

    cfgp::DesignRequest design;
    if (j.contains("design")) design = parse_design_request(j.at("design"), "design");
    design.d = d;
    design.m = m;
    if (design.t_lo.size() == 0) design.t_lo = t_lo;
    if (design.t_hi.size() == 0) design.t_hi = t_hi;

    cfgp::ALResult res;
    if (mode == "al") {
      if (!(total_budget > 0.0))
        throw cfgp::config_error("experiment config: al mode needs a positive "
                                 "total_budget");
      if (t_lo.size() == 0 || t_hi.size() == 0)
        throw cfgp::config_error("experiment config: al mode needs t_lo and t_hi");
      cfgp::ALConfig cfg;
      cfg.total_budget = total_budget;
      cfg.initial = design;
      cfg.initial_budget = num_field(j, ctx, "initial_budget", -1.0);
      cfg.refit_every = int_field(j, ctx, "refit_every", 1);
      cfg.t_lo = t_lo;
      cfg.t_hi = t_hi;
      cfg.seed = seed;
      cfg.basis = basis;
      cfg.fit = fit;
      if (j.contains("criterion")) {
        static const char* cctx = "criterion";
        check_keys(j.at("criterion"), cctx,
                   {"n_probes", "n_starts", "max_iters", "fd_step_frac"});
        parse_criterion_knobs(j.at("criterion"), cctx, cfg.criterion);
      }
      cfg.eval_grid = eval_grid;
      cfgp::TraceCallback cb;
      if (on_row != nullptr) {
        cb = [on_row, user](const cfgp::ALRecord& rec) {
          cfgp_al_row row;
          row.iteration = rec.iteration;
          row.x = rec.x.data();
          row.d = static_cast<int>(rec.x.size());
          row.t = rec.t.data();
          row.m = static_cast<int>(rec.t.size());
          row.criterion_value = rec.criterion_value;
          row.reduction = rec.reduction;
          row.cost = rec.cost;
          row.cum_cost = rec.cum_cost;
          row.loglik = rec.loglik;
          row.rmse = rec.rmse;
          row.refitted = rec.refitted ? 1 : 0;
          on_row(&row, user);
        };
      }
      res = cfgp::run_al(cfg, *sim, cost, cb);
    } else if (mode == "one_shot") {
      if (!(total_budget > 0.0) && design.budget <= 0.0 && !j.contains("design"))
        throw cfgp::config_error("experiment config: one_shot mode needs a budget or "
                                 "an explicit design");
      if (total_budget > 0.0) design.budget = total_budget;
      design.seed = cfgp::derive_seed(seed, 1);
      const cfgp::DesignPlan plan = cfgp::generate_design(design, cost);
      res = cfgp::run_one_shot(plan, *sim, basis, fit, eval_grid);
      res.initial_cost = plan.total_cost;
    } else {
      static const char* sctx = "single_fidelity";
      cfgp::Vec t_fixed;
      int n = 0;
      if (j.contains("single_fidelity")) {
        const json& s = j.at("single_fidelity");
        check_keys(s, sctx, {"t", "n"});
        t_fixed = vec_field(s, sctx, "t", m, cfgp::Vec());
        n = int_field(s, sctx, "n", 0);
      }
      if (n < 1)
        throw cfgp::config_error("experiment config: single_fidelity needs n >= 1");
      if (t_fixed.size() == 0) {
        if (!(total_budget > 0.0))
          throw cfgp::config_error("experiment config: single_fidelity needs either "
                                   "\"t\" or a positive total_budget");
        const double per_point = total_budget / n;
        t_fixed = cfgp::Vec::Constant(m, cfgp::invert_cost(cost, per_point));
      }
      res = cfgp::run_single_fidelity(t_fixed, n, *sim, basis, fit, seed, eval_grid);
      res.initial_cost = n * cost.eval(t_fixed.head(cost.fidelity_dim()));
    }

    if (summary_json != nullptr) {
      ordered_json out;
      out["mode"] = mode;
      out["stop_reason"] = res.stop_reason;
      out["n"] = res.data.n();
      out["n_acquired"] = res.trace.size();
      out["initial_cost"] = res.initial_cost;
      out["acquired_cost"] = res.acquired_cost;
      out["total_cost"] = res.initial_cost + res.acquired_cost;
      out["loglik"] = res.fit.loglik;
      out["final_rmse"] = res.final_rmse;
      out["params"] = params_to_json(res.fit.best);
      *summary_json = dup_string(out.dump());
      if (*summary_json == nullptr) throw std::bad_alloc();
    }
    if (final_data != nullptr) *final_data = new cfgp_dataset{std::move(res.data)};
    return CFGP_OK;
  });
}

// ---- validation -----------------------------------------------------------------

int cfgp_validate_integrals(uint64_t seed, int draws_per_family, int perturb,
                            char** report_text, int* all_pass) {
  if (draws_per_family < 1)
    return fail_invalid("cfgp_validate_integrals: draws_per_family must be positive");
  return guarded([&] {
    const cfgp::ValidationReport report =
        cfgp::validate_integrals(seed, draws_per_family, perturb != 0);
    if (all_pass != nullptr) *all_pass = report.all_pass ? 1 : 0;
    if (report_text != nullptr) {
      *report_text = dup_string(report.to_text());
      if (*report_text == nullptr) throw std::bad_alloc();
    }
    return CFGP_OK;
  });
}

int cfgp_rmse(const double* predictions, const double* truths, int n, double* out) {
  if (predictions == nullptr || truths == nullptr || out == nullptr)
    return fail_invalid("cfgp_rmse: buffers must not be null");
  if (n < 1) return fail_invalid("cfgp_rmse: n must be positive");
  return guarded([&] {
    *out = cfgp::rmse(Eigen::Map<const cfgp::Vec>(predictions, n),
                      Eigen::Map<const cfgp::Vec>(truths, n));
    return CFGP_OK;
  });
}
