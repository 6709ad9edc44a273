#include "cli_support.hpp"

#include "cfgp.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace cli {

namespace {

// ---- C handle RAII ---------------------------------------------------------

struct DatasetDeleter {
  void operator()(cfgp_dataset* p) const { cfgp_dataset_free(p); }
};
struct DesignDeleter {
  void operator()(cfgp_design* p) const { cfgp_design_free(p); }
};
struct ModelDeleter {
  void operator()(cfgp_model* p) const { cfgp_model_free(p); }
};
struct ImspeDeleter {
  void operator()(cfgp_imspe* p) const { cfgp_imspe_free(p); }
};
struct SimulatorDeleter {
  void operator()(cfgp_simulator* p) const { cfgp_simulator_free(p); }
};
using DatasetPtr = std::unique_ptr<cfgp_dataset, DatasetDeleter>;
using DesignPtr = std::unique_ptr<cfgp_design, DesignDeleter>;
using ModelPtr = std::unique_ptr<cfgp_model, ModelDeleter>;
using ImspePtr = std::unique_ptr<cfgp_imspe, ImspeDeleter>;
using SimulatorPtr = std::unique_ptr<cfgp_simulator, SimulatorDeleter>;

std::string take_string(char* s) {
  if (s == nullptr) return std::string();
  std::string out(s);
  cfgp_string_free(s);
  return out;
}

void check_rc(int rc, const std::string& what) {
  if (rc == CFGP_OK) return;
  const int code =
      (rc == CFGP_ECONFIG || rc == CFGP_EINVAL) ? kExitConfigError : kExitCheckFailure;
  throw cli_error(code, what + ": " + cfgp_last_error());
}

// ---- config loading ---------------------------------------------------------

struct LoadedConfig {
  json config = json::object();
  std::string raw;
  std::uint64_t seed = 1;
};

LoadedConfig load_config(const CommonArgs& args) {
  LoadedConfig lc;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) throw cli_error(kExitConfigError, "cannot open config file " + args.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    lc.raw = ss.str();
    lc.config = json::parse(lc.raw, nullptr, false);
    if (lc.config.is_discarded())
      throw cli_error(kExitConfigError, args.config_path + " is not valid JSON");
    if (!lc.config.is_object())
      throw cli_error(kExitConfigError, args.config_path + " must hold a JSON object");
  }
  if (lc.config.contains("seed")) {
    const json& s = lc.config.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                   s.get<std::int64_t>() < 0))
      throw cli_error(kExitConfigError, "config \"seed\" must be a nonnegative integer");
    lc.seed = s.get<std::uint64_t>();
  }
  if (args.seed_set) lc.seed = args.seed;
  return lc;
}

void check_top_keys(const json& config, std::initializer_list<const char*> allowed,
                    const char* command) {
  for (const auto& item : config.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw cli_error(kExitConfigError, std::string(command) + ": unknown config key \"" +
                                            item.key() + "\"");
  }
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir + "/" + name;
}

// Effective seed goes into the nested section only when the user left it out,
// derived with a per-purpose salt so streams stay decorrelated.
void default_nested_seed(json& section, std::uint64_t seed, std::uint64_t salt) {
  if (!section.is_object()) section = json::object();
  if (!section.contains("seed")) section["seed"] = mix_seed(seed, salt);
}

// ---- dataset plumbing ---------------------------------------------------------

DatasetPtr make_dataset(const CsvDataset& csv, const std::string& what) {
  cfgp_dataset* raw = nullptr;
  check_rc(cfgp_dataset_create(csv.X.data(), csv.T.data(), csv.y.data(), csv.n, csv.d,
                               csv.m, &raw),
           what);
  return DatasetPtr(raw);
}

std::string dataset_csv_body(const cfgp_dataset* data) {
  int n = 0, d = 0, m = 0;
  check_rc(cfgp_dataset_dims(data, &n, &d, &m), "dataset dims");
  std::vector<double> X(static_cast<size_t>(n) * d), T(static_cast<size_t>(n) * m), y(n);
  check_rc(cfgp_dataset_get(data, X.data(), T.data(), y.data()), "dataset export");
  std::string out;
  for (int j = 0; j < d; ++j) out += "x_" + std::to_string(j + 1) + ",";
  for (int j = 0; j < m; ++j) out += "t_" + std::to_string(j + 1) + ",";
  out += "y\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) out += format_g17(X[static_cast<size_t>(i) * d + j]) + ",";
    for (int j = 0; j < m; ++j) out += format_g17(T[static_cast<size_t>(i) * m + j]) + ",";
    out += format_g17(y[i]) + "\n";
  }
  return out;
}

// ---- experiment plumbing shared by al-run / one-shot / benchmark ---------------

struct TraceCollector {
  std::vector<std::string> lines;
};

void trace_cb(const cfgp_al_row* row, void* user) {
  auto* tc = static_cast<TraceCollector*>(user);
  std::string line = std::to_string(row->iteration);
  for (int j = 0; j < row->d; ++j) line += "," + format_g17(row->x[j]);
  for (int j = 0; j < row->m; ++j) line += "," + format_g17(row->t[j]);
  line += "," + format_g17(row->criterion_value);
  line += "," + format_g17(row->reduction);
  line += "," + format_g17(row->cost);
  line += "," + format_g17(row->cum_cost);
  line += std::string(",") + (row->refitted ? "1" : "0");
  line += "," + format_g17(row->loglik);
  line += "," + format_g17(row->rmse);
  tc->lines.push_back(std::move(line));
}

struct ExperimentOutput {
  ordered_json summary;
  DatasetPtr data;
  std::vector<std::string> trace_lines;
};

ExperimentOutput run_experiment(const json& payload, bool want_trace) {
  ExperimentOutput out;
  TraceCollector tc;
  char* summary = nullptr;
  cfgp_dataset* data = nullptr;
  const int rc = cfgp_run_experiment(payload.dump().c_str(), want_trace ? trace_cb : nullptr,
                                     want_trace ? &tc : nullptr, &summary, &data);
  check_rc(rc, "experiment");
  out.summary = ordered_json::parse(take_string(summary));
  out.data = DatasetPtr(data);
  out.trace_lines = std::move(tc.lines);
  return out;
}

// ---- two-level config merge for the benchmark ----------------------------------

ordered_json merge_section(const ordered_json& defaults, const json& user) {
  ordered_json out = defaults;
  if (!user.is_object()) return user;
  for (const auto& item : user.items()) {
    if (out.contains(item.key()) && out.at(item.key()).is_object() &&
        item.value().is_object())
      out[item.key()] = merge_section(out.at(item.key()), item.value());
    else
      out[item.key()] = item.value();
  }
  return out;
}

}  // namespace

// ---- small utilities -------------------------------------------------------------

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master ^ (0xD1B54A32D192ED03ULL * (index + 1));
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string provenance_csv_header(const Provenance& p) {
  std::string out;
  out += std::string("# cfgp-bench ") + cfgp_version() + "\n";
  out += "# command: " + p.command + "\n";
  out += "# config-hash: " + p.config_hash + "\n";
  out += "# seed: " + std::to_string(p.seed) + "\n";
  out += "# resolved-config: " + p.resolved_config.dump() + "\n";
  if (!p.rescale.is_null()) out += "# rescale: " + p.rescale.dump() + "\n";
  return out;
}

ordered_json provenance_json(const Provenance& p) {
  ordered_json j;
  j["tool"] = "cfgp-bench";
  j["version"] = cfgp_version();
  j["command"] = p.command;
  j["config_hash"] = p.config_hash;
  j["seed"] = p.seed;
  j["resolved_config"] = p.resolved_config;
  if (!p.rescale.is_null()) j["rescale"] = p.rescale;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cli_error(kExitCheckFailure, "cannot open " + path + " for writing");
  out << content;
  if (!out) throw cli_error(kExitCheckFailure, "failed writing " + path);
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec)
    throw cli_error(kExitCheckFailure, "cannot create directory " + path + ": " + ec.message());
}

CsvDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cli_error(kExitConfigError, "cannot open dataset file " + path);

  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        parts.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    parts.push_back(cur);
    return parts;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const std::vector<std::string> parts = split(line);
    if (parts.size() != header.size())
      throw cli_error(kExitConfigError,
                      path + ": row has " + std::to_string(parts.size()) + " fields, header has " +
                          std::to_string(header.size()));
    std::vector<double> row(parts.size());
    for (size_t i = 0; i < parts.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(parts[i].c_str(), &end);
      if (end == parts[i].c_str() || *end != '\0')
        throw cli_error(kExitConfigError, path + ": cannot parse number \"" + parts[i] + "\"");
    }
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw cli_error(kExitConfigError, path + ": missing header row");
  if (rows.empty()) throw cli_error(kExitConfigError, path + ": no data rows");

  // header must be x_1..x_d, t_1..t_m, y in order
  int d = 0, m = 0;
  size_t pos = 0;
  while (pos < header.size() && header[pos] == "x_" + std::to_string(d + 1)) {
    ++d;
    ++pos;
  }
  while (pos < header.size() && header[pos] == "t_" + std::to_string(m + 1)) {
    ++m;
    ++pos;
  }
  if (d < 1 || m < 1 || pos + 1 != header.size() || header[pos] != "y") {
    std::string got;
    for (size_t i = 0; i < header.size(); ++i) got += (i ? "," : "") + header[i];
    throw cli_error(kExitConfigError,
                    path + ": header must be x_1..x_d, t_1..t_m, y (got \"" + got + "\")");
  }

  CsvDataset csv;
  csv.n = static_cast<int>(rows.size());
  csv.d = d;
  csv.m = m;
  csv.X.resize(static_cast<size_t>(csv.n) * d);
  csv.T.resize(static_cast<size_t>(csv.n) * m);
  csv.y.resize(csv.n);
  for (int i = 0; i < csv.n; ++i) {
    for (int j = 0; j < d; ++j) csv.X[static_cast<size_t>(i) * d + j] = rows[i][j];
    for (int j = 0; j < m; ++j) csv.T[static_cast<size_t>(i) * m + j] = rows[i][d + j];
    csv.y[i] = rows[i][d + m];
  }

  // rescale inputs to the unit cube / fidelities to (0, 1] where needed,
  // recording the inverse maps
  ordered_json xmaps = ordered_json::array();
  for (int j = 0; j < d; ++j) {
    double lo = csv.X[j], hi = csv.X[j];
    for (int i = 0; i < csv.n; ++i) {
      lo = std::min(lo, csv.X[static_cast<size_t>(i) * d + j]);
      hi = std::max(hi, csv.X[static_cast<size_t>(i) * d + j]);
    }
    if (lo < -1e-12 || hi > 1.0 + 1e-12) {
      if (!(hi > lo))
        throw cli_error(kExitConfigError,
                        path + ": input column x_" + std::to_string(j + 1) + " is constant and "
                        "outside [0,1]; cannot rescale");
      for (int i = 0; i < csv.n; ++i) {
        double& v = csv.X[static_cast<size_t>(i) * d + j];
        v = (v - lo) / (hi - lo);
      }
      ordered_json mp;
      mp["lo"] = lo;
      mp["hi"] = hi;
      xmaps.push_back(mp);
    } else {
      xmaps.push_back(nullptr);
    }
  }
  ordered_json tmaps = ordered_json::array();
  for (int j = 0; j < m; ++j) {
    double hi = 0.0;
    for (int i = 0; i < csv.n; ++i)
      hi = std::max(hi, csv.T[static_cast<size_t>(i) * m + j]);
    if (hi > 1.0 + 1e-12) {
      for (int i = 0; i < csv.n; ++i) csv.T[static_cast<size_t>(i) * m + j] /= hi;
      ordered_json mp;
      mp["t_max"] = hi;
      tmaps.push_back(mp);
    } else {
      tmaps.push_back(nullptr);
    }
  }
  csv.rescale = ordered_json();
  bool any = false;
  for (const auto& v : xmaps)
    if (!v.is_null()) any = true;
  for (const auto& v : tmaps)
    if (!v.is_null()) any = true;
  if (any) {
    csv.rescale = ordered_json::object();
    csv.rescale["x"] = xmaps;
    csv.rescale["t"] = tmaps;
  }
  return csv;
}

// ---- fit -----------------------------------------------------------------------

int cmd_fit(const CommonArgs& args) {
  LoadedConfig lc = load_config(args);
  check_top_keys(lc.config, {"data", "basis", "fit", "seed"}, "fit");
  if (!lc.config.contains("data"))
    throw cli_error(kExitConfigError, "fit: config needs a \"data\" CSV path");
  const CsvDataset csv = read_dataset_csv(lc.config.at("data").get<std::string>());
  DatasetPtr data = make_dataset(csv, "fit: dataset");

  json payload = json::object();
  if (lc.config.contains("basis")) payload["basis"] = lc.config.at("basis");
  payload["fit"] = lc.config.contains("fit") ? lc.config.at("fit") : json::object();
  default_nested_seed(payload["fit"], lc.seed, 0x464954);

  cfgp_model* model_raw = nullptr;
  char* report_raw = nullptr;
  check_rc(cfgp_fit(data.get(), payload.dump().c_str(), &model_raw, &report_raw), "fit");
  ModelPtr model(model_raw);
  const ordered_json report = ordered_json::parse(take_string(report_raw));

  Provenance prov;
  prov.command = "fit";
  prov.config_hash = hex64(fnv1a64(lc.raw));
  prov.seed = lc.seed;
  prov.resolved_config = ordered_json::parse(payload.dump());
  prov.rescale = csv.rescale;

  ensure_directory(args.out_dir);
  ordered_json out;
  out["provenance"] = provenance_json(prov);
  out["report"] = report;
  write_text_file(join_path(args.out_dir, "fit_report.json"), out.dump(2) + "\n");
  std::cout << "fit: loglik " << format_g17(report.at("loglik").get<double>()) << ", report in "
            << join_path(args.out_dir, "fit_report.json") << "\n";
  return kExitOk;
}

// ---- design --------------------------------------------------------------------

int cmd_design(const CommonArgs& args) {
  LoadedConfig lc = load_config(args);
  check_top_keys(lc.config, {"design", "cost", "seed"}, "design");
  json payload = json::object();
  payload["design"] = lc.config.contains("design") ? lc.config.at("design") : json::object();
  if (lc.config.contains("cost")) payload["cost"] = lc.config.at("cost");
  default_nested_seed(payload["design"], lc.seed, 0x444553);

  cfgp_design* raw = nullptr;
  check_rc(cfgp_design_generate(payload.dump().c_str(), &raw), "design");
  DesignPtr design(raw);

  int n = 0, d = 0, m = 0;
  check_rc(cfgp_design_dims(design.get(), &n, &d, &m), "design dims");
  std::vector<double> X(static_cast<size_t>(n) * d), T(static_cast<size_t>(n) * std::max(m, 1));
  check_rc(cfgp_design_get(design.get(), X.data(), m > 0 ? T.data() : nullptr), "design export");
  double total_cost = 0.0;
  char* notice_raw = nullptr;
  check_rc(cfgp_design_info(design.get(), &total_cost, &notice_raw), "design info");
  const std::string notice = take_string(notice_raw);

  Provenance prov;
  prov.command = "design";
  prov.config_hash = hex64(fnv1a64(lc.raw));
  prov.seed = lc.seed;
  prov.resolved_config = ordered_json::parse(payload.dump());

  std::string body = provenance_csv_header(prov);
  body += "# total-cost: " + format_g17(total_cost) + "\n";
  if (!notice.empty()) body += "# notice: " + notice + "\n";
  for (int j = 0; j < d; ++j) body += "x_" + std::to_string(j + 1) + (j + 1 < d || m > 0 ? "," : "");
  for (int j = 0; j < m; ++j) body += "t_" + std::to_string(j + 1) + (j + 1 < m ? "," : "");
  body += "\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j)
      body += format_g17(X[static_cast<size_t>(i) * d + j]) + (j + 1 < d || m > 0 ? "," : "");
    for (int j = 0; j < m; ++j)
      body += format_g17(T[static_cast<size_t>(i) * m + j]) + (j + 1 < m ? "," : "");
    body += "\n";
  }
  ensure_directory(args.out_dir);
  const std::string path = join_path(args.out_dir, "design.csv");
  write_text_file(path, body);
  std::cout << "design: " << n << " points, total cost " << format_g17(total_cost) << ", in "
            << path << "\n";
  return kExitOk;
}

// ---- al-run / one-shot ------------------------------------------------------------

namespace {

int run_experiment_command(const CommonArgs& args, const std::string& mode,
                           const std::string& command) {
  LoadedConfig lc = load_config(args);
  check_top_keys(lc.config,
                 {"seed", "simulator", "cost", "total_budget", "initial_budget", "design",
                  "basis", "fit", "criterion", "refit_every", "t_lo", "t_hi",
                  "single_fidelity", "eval_grid"},
                 command.c_str());
  json payload = lc.config;
  payload["mode"] = mode;
  payload["seed"] = lc.seed;
  if (!payload.contains("fit")) payload["fit"] = json::object();
  default_nested_seed(payload["fit"], lc.seed, 0x464954);
  if (!payload.contains("eval_grid")) {
    payload["eval_grid"] = json::object();
    payload["eval_grid"]["n"] = 200;
    payload["eval_grid"]["seed"] = mix_seed(lc.seed, 0x45564C);
  }

  const bool want_trace = mode == "al";
  ExperimentOutput out = run_experiment(payload, want_trace);

  Provenance prov;
  prov.command = command;
  prov.config_hash = hex64(fnv1a64(lc.raw));
  prov.seed = lc.seed;
  prov.resolved_config = ordered_json::parse(payload.dump());

  ensure_directory(args.out_dir);
  if (want_trace) {
    int d = 1, m = 1;
    cfgp_dataset_dims(out.data.get(), nullptr, &d, &m);
    std::string trace = provenance_csv_header(prov);
    trace += "iteration";
    for (int j = 0; j < d; ++j) trace += ",x_" + std::to_string(j + 1);
    for (int j = 0; j < m; ++j) trace += ",t_" + std::to_string(j + 1);
    trace += ",criterion_value,reduction,cost,cum_cost,refitted,loglik,rmse\n";
    for (const std::string& line : out.trace_lines) trace += line + "\n";
    write_text_file(join_path(args.out_dir, "al_trace.csv"), trace);
  }
  write_text_file(join_path(args.out_dir, "final_data.csv"),
                  provenance_csv_header(prov) + dataset_csv_body(out.data.get()));
  ordered_json summary;
  summary["provenance"] = provenance_json(prov);
  summary["summary"] = out.summary;
  write_text_file(join_path(args.out_dir, "summary.json"), summary.dump(2) + "\n");
  std::cout << command << ": stop_reason " << out.summary.at("stop_reason").get<std::string>()
            << ", n " << out.summary.at("n").get<int>() << ", total cost "
            << format_g17(out.summary.at("total_cost").get<double>());
  if (out.summary.contains("final_rmse") && out.summary.at("final_rmse").is_number())
    std::cout << ", rmse " << format_g17(out.summary.at("final_rmse").get<double>());
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int cmd_al_run(const CommonArgs& args) { return run_experiment_command(args, "al", "al-run"); }

int cmd_one_shot(const CommonArgs& args) {
  return run_experiment_command(args, "one_shot", "one-shot");
}

// ---- benchmark ---------------------------------------------------------------------

namespace {

struct BenchmarkCell {
  int index = 0;
  std::string method;
  double phi2_sq = 0.0;
  double gamma = 0.0;
  int set = 0;
  int rep = 0;
  std::uint64_t sim_seed = 0;
  std::uint64_t run_seed = 0;
};

ordered_json benchmark_defaults(std::uint64_t seed) {
  ordered_json def;
  def["phi2_sq"] = {1.0, 10.0, 100.0};
  def["gamma"] = {0.05, 0.5, 0.95};
  def["methods"] = {"al-lbm", "os-lbm", "al-bm", "os-bm", "sf"};
  def["sets"] = 3;
  def["reps"] = 3;
  def["total_budget"] = 128.0;
  def["initial_budget"] = 64.0;
  def["cost"] = ordered_json{{"kind", "power_single"}, {"c", 2.0}};
  def["t_lo"] = 0.25;
  def["t_hi"] = 1.0;
  def["sf"] = ordered_json{{"t", 0.25}, {"n", 8}};
  def["phi1_sq"] = 1.0;
  def["a"] = 1.0;
  def["l"] = 4.0;
  def["family1"] = "gaussian";
  def["family2"] = "gaussian";
  def["bm_gamma"] = 0.5;
  def["eval_grid_n"] = 200;
  def["gp"] = ordered_json{{"nx", 101}, {"nt", 21}, {"t_max", 1.0}};
  def["basis"] = ordered_json{{"kind", "constant"}, {"include_fidelity_trend", false}};
  def["fit"] = ordered_json{{"n_starts", 3}, {"max_iters", 50}, {"grad_tol", 1e-5}};
  def["criterion"] = ordered_json{{"n_probes", 24}, {"n_starts", 4}, {"max_iters", 30}};
  def["refit_every"] = 2;
  def["design_kind"] = "mmed";
  def["seed"] = seed;
  return def;
}

ordered_json build_cell_payload(const ordered_json& cfg, const BenchmarkCell& cell,
                                std::uint64_t eval_seed) {
  ordered_json sim;
  sim["kind"] = "gp_draw";
  sim["seed"] = cell.sim_seed;
  sim["d"] = 1;
  sim["m"] = 1;
  ordered_json gp;
  gp["sigma2"] = 1.0;
  gp["family1"] = cfg.at("family1");
  gp["family2"] = cfg.at("family2");
  gp["phi1"] = std::sqrt(cfg.at("phi1_sq").get<double>());
  gp["phi2"] = std::sqrt(cell.phi2_sq);
  gp["gamma"] = cell.gamma;
  gp["a"] = cfg.at("a");
  gp["l"] = cfg.at("l");
  gp["nx"] = cfg.at("gp").at("nx");
  gp["nt"] = cfg.at("gp").at("nt");
  gp["t_max"] = cfg.at("gp").at("t_max");
  sim["gp"] = gp;

  ordered_json fit = cfg.at("fit");
  fit["family1"] = cfg.at("family1");
  fit["family2"] = cfg.at("family2");
  fit["exponents_l"] = cfg.at("l");
  fit["seed"] = mix_seed(cell.run_seed, 0x464954);
  const bool bm = cell.method == "al-bm" || cell.method == "os-bm" || cell.method == "sf";
  if (bm) fit["fix_gamma"] = cfg.at("bm_gamma");

  ordered_json payload;
  payload["seed"] = cell.run_seed;
  payload["simulator"] = sim;
  payload["cost"] = cfg.at("cost");
  payload["t_lo"] = cfg.at("t_lo");
  payload["t_hi"] = cfg.at("t_hi");
  payload["basis"] = cfg.at("basis");
  payload["fit"] = fit;
  ordered_json grid;
  grid["n"] = cfg.at("eval_grid_n");
  grid["seed"] = eval_seed;
  payload["eval_grid"] = grid;

  if (cell.method == "al-lbm" || cell.method == "al-bm") {
    payload["mode"] = "al";
    payload["total_budget"] = cfg.at("total_budget");
    payload["initial_budget"] = cfg.at("initial_budget");
    payload["refit_every"] = cfg.at("refit_every");
    payload["criterion"] = cfg.at("criterion");
    ordered_json design;
    design["kind"] = cfg.at("design_kind");
    payload["design"] = design;
  } else if (cell.method == "os-lbm" || cell.method == "os-bm") {
    payload["mode"] = "one_shot";
    payload["total_budget"] = cfg.at("total_budget");
    ordered_json design;
    design["kind"] = cfg.at("design_kind");
    payload["design"] = design;
  } else if (cell.method == "sf") {
    payload["mode"] = "single_fidelity";
    payload["single_fidelity"] = cfg.at("sf");
  } else {
    throw cli_error(kExitConfigError, "benchmark: unknown method \"" + cell.method + "\"");
  }
  return payload;
}

std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

std::string run_benchmark_cell(const ordered_json& cfg, const BenchmarkCell& cell,
                               std::uint64_t eval_seed) {
  std::string row = cell.method + "," + format_g17(cell.phi2_sq) + "," +
                    format_g17(cell.gamma) + "," + std::to_string(cell.set) + "," +
                    std::to_string(cell.rep) + "," + std::to_string(cell.run_seed);
  try {
    const ordered_json payload = build_cell_payload(cfg, cell, eval_seed);
    char* summary_raw = nullptr;
    const int rc =
        cfgp_run_experiment(payload.dump().c_str(), nullptr, nullptr, &summary_raw, nullptr);
    if (rc != CFGP_OK)
      throw cli_error(kExitCheckFailure, std::string(cfgp_last_error()));
    const ordered_json summary = ordered_json::parse(take_string(summary_raw));
    const double rmse = summary.at("final_rmse").is_number()
                            ? summary.at("final_rmse").get<double>()
                            : std::numeric_limits<double>::quiet_NaN();
    row += "," + format_g17(rmse);
    row += "," + format_g17(summary.at("total_cost").get<double>());
    row += "," + std::to_string(summary.at("n").get<int>());
    row += ",ok";
  } catch (const std::exception& e) {
    row += ",nan,nan,0," + sanitize_field(e.what());
  }
  return row + "\n";
}

}  // namespace

int cmd_benchmark(const CommonArgs& args) {
  LoadedConfig lc = load_config(args);
  const ordered_json defaults = benchmark_defaults(lc.seed);
  for (const auto& item : lc.config.items())
    if (!defaults.contains(item.key()))
      throw cli_error(kExitConfigError,
                      "benchmark: unknown config key \"" + item.key() + "\"");
  ordered_json cfg = merge_section(defaults, lc.config);
  cfg["seed"] = lc.seed;  // --seed wins over the config body

  const auto& phis = cfg.at("phi2_sq");
  const auto& gammas = cfg.at("gamma");
  const auto& methods = cfg.at("methods");
  const int sets = cfg.at("sets").get<int>();
  const int reps = cfg.at("reps").get<int>();
  if (!phis.is_array() || !gammas.is_array() || !methods.is_array() || phis.empty() ||
      gammas.empty() || methods.empty() || sets < 1 || reps < 1)
    throw cli_error(kExitConfigError,
                    "benchmark: phi2_sq, gamma and methods must be nonempty arrays and "
                    "sets/reps positive");

  const std::uint64_t master = lc.seed;
  const std::uint64_t eval_seed = mix_seed(master, 0x45564C);

  std::vector<BenchmarkCell> cells;
  int index = 0;
  for (size_t pi = 0; pi < phis.size(); ++pi)
    for (size_t gi = 0; gi < gammas.size(); ++gi)
      for (int si = 0; si < sets; ++si) {
        std::uint64_t sim_seed = mix_seed(master, 0x53494D);
        sim_seed = mix_seed(sim_seed, pi);
        sim_seed = mix_seed(sim_seed, gi);
        sim_seed = mix_seed(sim_seed, static_cast<std::uint64_t>(si));
        for (size_t mi = 0; mi < methods.size(); ++mi)
          for (int ri = 0; ri < reps; ++ri) {
            BenchmarkCell cell;
            cell.index = index;
            cell.method = methods[mi].get<std::string>();
            cell.phi2_sq = phis[pi].get<double>();
            cell.gamma = gammas[gi].get<double>();
            cell.set = si;
            cell.rep = ri;
            cell.sim_seed = sim_seed;
            cell.run_seed = mix_seed(mix_seed(master, 0x52554E), index);
            cells.push_back(std::move(cell));
            ++index;
          }
      }

  ensure_directory(args.out_dir);
  const std::string cells_dir = join_path(args.out_dir, "cells");
  ensure_directory(cells_dir);

  auto cell_path = [&](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "cell_%05d.csv", i);
    return join_path(cells_dir, buf);
  };

  // cells are independent: own RNG streams, own output files
  const int threads = std::max(1, args.threads);
  std::atomic<size_t> next(0);
  std::vector<std::string> errors(threads);
  auto worker = [&](int tid) {
    try {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cells.size()) break;
        const std::string row = run_benchmark_cell(cfg, cells[i], eval_seed);
        write_text_file(cell_path(cells[i].index), row);
      }
    } catch (const std::exception& e) {
      errors[tid] = e.what();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (const std::string& err : errors)
    if (!err.empty()) throw cli_error(kExitCheckFailure, "benchmark: " + err);

  Provenance prov;
  prov.command = "benchmark";
  prov.config_hash = hex64(fnv1a64(lc.raw));
  prov.seed = lc.seed;
  prov.resolved_config = cfg;

  std::string merged = provenance_csv_header(prov);
  merged += "method,phi2_sq,gamma,set,rep,seed,rmse,cost_used,n_points,status\n";
  for (const BenchmarkCell& cell : cells) {
    std::ifstream in(cell_path(cell.index), std::ios::binary);
    if (!in)
      throw cli_error(kExitCheckFailure, "benchmark: missing cell file " + cell_path(cell.index));
    std::ostringstream ss;
    ss << in.rdbuf();
    merged += ss.str();
  }
  const std::string path = join_path(args.out_dir, "benchmark_results.csv");
  write_text_file(path, merged);
  std::cout << "benchmark: " << cells.size() << " runs, results in " << path << "\n";
  return kExitOk;
}

// ---- validate-integrals ----------------------------------------------------------------

int cmd_validate_integrals(const CommonArgs& args) {
  LoadedConfig lc = load_config(args);
  check_top_keys(lc.config, {"seed", "draws", "perturb"}, "validate-integrals");
  const int draws = lc.config.value("draws", 200);
  const bool perturb = lc.config.value("perturb", false);

  char* text_raw = nullptr;
  int all_pass = 0;
  check_rc(cfgp_validate_integrals(lc.seed, draws, perturb ? 1 : 0, &text_raw, &all_pass),
           "validate-integrals");
  const std::string table = take_string(text_raw);

  Provenance prov;
  prov.command = "validate-integrals";
  prov.config_hash = hex64(fnv1a64(lc.raw));
  prov.seed = lc.seed;
  prov.resolved_config =
      ordered_json{{"seed", lc.seed}, {"draws", draws}, {"perturb", perturb}};

  ensure_directory(args.out_dir);
  write_text_file(join_path(args.out_dir, "validation.txt"),
                  provenance_csv_header(prov) + table);
  std::cout << table;
  return all_pass ? kExitOk : kExitCheckFailure;
}

// ---- criterion-surface ------------------------------------------------------------------

int cmd_criterion_surface(const CommonArgs& args) {
  LoadedConfig lc = load_config(args);
  check_top_keys(lc.config,
                 {"data", "simulator", "design", "cost", "basis", "fit", "params",
                  "criterion", "grid", "t_lo", "t_hi", "seed"},
                 "criterion-surface");

  const json cost_json =
      lc.config.contains("cost") ? lc.config.at("cost")
                                 : json{{"kind", "power_single"}, {"c", 2.0}};
  const double t_lo = lc.config.value("t_lo", 0.25);
  const double t_hi = lc.config.value("t_hi", 1.0);
  if (!(t_lo > 0.0) || !(t_hi >= t_lo))
    throw cli_error(kExitConfigError, "criterion-surface: need 0 < t_lo <= t_hi");

  // assemble the training dataset: either an existing CSV or a fresh design
  // pushed through a simulator
  DatasetPtr data;
  ordered_json rescale;
  if (lc.config.contains("data")) {
    const CsvDataset csv = read_dataset_csv(lc.config.at("data").get<std::string>());
    if (csv.d != 1 || csv.m != 1)
      throw cli_error(kExitConfigError,
                      "criterion-surface: plotting needs d = 1, m = 1 (got d = " +
                          std::to_string(csv.d) + ", m = " + std::to_string(csv.m) + ")");
    rescale = csv.rescale;
    data = make_dataset(csv, "criterion-surface: dataset");
  } else {
    json sim_json =
        lc.config.contains("simulator") ? lc.config.at("simulator") : json::object();
    default_nested_seed(sim_json, lc.seed, 0x53494D);
    cfgp_simulator* sim_raw = nullptr;
    check_rc(cfgp_simulator_create(sim_json.dump().c_str(), &sim_raw), "criterion-surface");
    SimulatorPtr sim(sim_raw);
    int sd = 0, sm = 0;
    check_rc(cfgp_simulator_dims(sim.get(), &sd, &sm), "criterion-surface");
    if (sd != 1 || sm != 1)
      throw cli_error(kExitConfigError,
                      "criterion-surface: plotting needs a d = 1, m = 1 simulator");

    json design_json =
        lc.config.contains("design") ? lc.config.at("design") : json{{"kind", "mmed"}, {"n", 16}};
    if (!design_json.contains("t_lo")) design_json["t_lo"] = t_lo;
    if (!design_json.contains("t_hi")) design_json["t_hi"] = t_hi;
    default_nested_seed(design_json, lc.seed, 0x444553);
    json dpayload;
    dpayload["design"] = design_json;
    dpayload["cost"] = cost_json;
    cfgp_design* des_raw = nullptr;
    check_rc(cfgp_design_generate(dpayload.dump().c_str(), &des_raw), "criterion-surface");
    DesignPtr design(des_raw);
    int n = 0, dd = 0, dm = 0;
    check_rc(cfgp_design_dims(design.get(), &n, &dd, &dm), "criterion-surface");
    std::vector<double> X(static_cast<size_t>(n) * dd), T(static_cast<size_t>(n) * dm), y(n);
    check_rc(cfgp_design_get(design.get(), X.data(), T.data()), "criterion-surface");
    for (int i = 0; i < n; ++i) {
      check_rc(cfgp_simulator_eval(sim.get(), &X[static_cast<size_t>(i) * dd],
                                   &T[static_cast<size_t>(i) * dm], &y[i]),
               "criterion-surface: simulator");
    }
    CsvDataset csv;
    csv.n = n;
    csv.d = dd;
    csv.m = dm;
    csv.X = std::move(X);
    csv.T = std::move(T);
    csv.y = std::move(y);
    data = make_dataset(csv, "criterion-surface: dataset");
  }

  // model at explicit parameters, or fitted
  ModelPtr model;
  if (lc.config.contains("params")) {
    json mpayload;
    if (lc.config.contains("basis")) mpayload["basis"] = lc.config.at("basis");
    mpayload["params"] = lc.config.at("params");
    cfgp_model* raw = nullptr;
    check_rc(cfgp_model_create(data.get(), mpayload.dump().c_str(), &raw), "criterion-surface");
    model.reset(raw);
  } else {
    json fpayload;
    if (lc.config.contains("basis")) fpayload["basis"] = lc.config.at("basis");
    fpayload["fit"] = lc.config.contains("fit") ? lc.config.at("fit") : json::object();
    default_nested_seed(fpayload["fit"], lc.seed, 0x464954);
    cfgp_model* raw = nullptr;
    check_rc(cfgp_fit(data.get(), fpayload.dump().c_str(), &raw, nullptr), "criterion-surface");
    model.reset(raw);
  }

  cfgp_imspe* state_raw = nullptr;
  check_rc(cfgp_imspe_state_create(model.get(), &state_raw), "criterion-surface");
  ImspePtr state(state_raw);

  int nx = 64, nt = 32;
  if (lc.config.contains("grid")) {
    const json& g = lc.config.at("grid");
    for (const auto& item : g.items())
      if (item.key() != "nx" && item.key() != "nt")
        throw cli_error(kExitConfigError,
                        "criterion-surface: unknown grid key \"" + item.key() + "\"");
    nx = g.value("nx", nx);
    nt = g.value("nt", nt);
  }
  if (nx < 2 || nt < 2)
    throw cli_error(kExitConfigError, "criterion-surface: grid needs nx, nt >= 2");

  const std::string cost_text = cost_json.dump();
  std::string body = "x_1,t_1,reduction,reduction_per_cost\n";
  for (int i = 0; i < nx; ++i) {
    const double x = static_cast<double>(i) / (nx - 1);
    for (int k = 0; k < nt; ++k) {
      const double t = t_lo + (t_hi - t_lo) * static_cast<double>(k) / (nt - 1);
      double red = 0.0;
      int degenerate = 0;
      check_rc(cfgp_imspe_reduction(state.get(), &x, &t, &red, &degenerate),
               "criterion-surface: reduction");
      double c = 0.0;
      check_rc(cfgp_cost_eval(cost_text.c_str(), &t, 1, &c), "criterion-surface: cost");
      body += format_g17(x) + "," + format_g17(t) + "," + format_g17(red) + "," +
              format_g17(red / c) + "\n";
    }
  }

  json opt_options = lc.config.contains("criterion") ? lc.config.at("criterion") : json::object();
  opt_options["t_lo"] = t_lo;
  opt_options["t_hi"] = t_hi;
  if (!opt_options.contains("seed")) opt_options["seed"] = mix_seed(lc.seed, 0x4F5054);
  char* opt_raw = nullptr;
  check_rc(cfgp_optimize_criterion(state.get(), cost_text.c_str(), opt_options.dump().c_str(),
                                   &opt_raw),
           "criterion-surface: optimizer");
  const ordered_json opt = ordered_json::parse(take_string(opt_raw));

  Provenance prov;
  prov.command = "criterion-surface";
  prov.config_hash = hex64(fnv1a64(lc.raw));
  prov.seed = lc.seed;
  ordered_json resolved;
  resolved["t_lo"] = t_lo;
  resolved["t_hi"] = t_hi;
  resolved["grid"] = ordered_json{{"nx", nx}, {"nt", nt}};
  resolved["cost"] = ordered_json::parse(cost_text);
  prov.resolved_config = resolved;
  prov.rescale = rescale;

  ensure_directory(args.out_dir);
  write_text_file(join_path(args.out_dir, "criterion_surface.csv"),
                  provenance_csv_header(prov) + body);
  ordered_json opt_out;
  opt_out["provenance"] = provenance_json(prov);
  opt_out["optimum"] = opt;
  write_text_file(join_path(args.out_dir, "criterion_opt.json"), opt_out.dump(2) + "\n");
  std::cout << "criterion-surface: " << nx * nt << " grid rows in "
            << join_path(args.out_dir, "criterion_surface.csv") << "\n";
  return kExitOk;
}

}  // namespace cli
