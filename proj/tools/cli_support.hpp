// Helpers behind the cfgp-bench command-line tool.  Everything here talks to
// the library through the public C interface only; the C++ headers of the
// core are deliberately not included.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cli {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;

/// Carries the process exit code alongside the message so main() can keep
/// the 0/1/2 contract without string matching.
class cli_error : public std::runtime_error {
 public:
  cli_error(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
  int exit_code;
};

/// Shortest exact decimal form with 17 significant digits.
std::string format_g17(double v);

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t h);

/// Deterministic child-seed derivation (splitmix64 mix); chained calls give
/// independent streams per benchmark cell.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

struct Provenance {
  std::string command;
  std::string config_hash;  // FNV-1a 64 of the raw config text
  std::uint64_t seed = 0;
  ordered_json resolved_config;            // defaults applied
  ordered_json rescale = ordered_json();   // ingestion maps, null when unused
};

/// '#'-prefixed header block for CSV outputs.  No timestamps: reruns with
/// the same config and seed must be byte-identical.
std::string provenance_csv_header(const Provenance& p);
ordered_json provenance_json(const Provenance& p);

struct CsvDataset {
  int n = 0, d = 0, m = 0;
  std::vector<double> X, T, y;  // row-major
  ordered_json rescale;         // maps applied at ingestion
};

/// Reads the x_1..x_d, t_1..t_m, y schema, then rescales inputs to the unit
/// cube (affine per column, only when data falls outside it) and fidelities
/// by their column maximum (only when it exceeds 1).
CsvDataset read_dataset_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

struct CommonArgs {
  std::string config_path;  // empty: all defaults
  std::string out_dir = "out";
  bool seed_set = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

int cmd_fit(const CommonArgs& args);
int cmd_design(const CommonArgs& args);
int cmd_al_run(const CommonArgs& args);
int cmd_one_shot(const CommonArgs& args);
int cmd_benchmark(const CommonArgs& args);
int cmd_validate_integrals(const CommonArgs& args);
int cmd_criterion_surface(const CommonArgs& args);

}  // namespace cli
