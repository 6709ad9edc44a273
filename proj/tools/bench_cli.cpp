// cfgp-bench: command-line front end for the continuous-fidelity GP library.
// Exit codes: 0 success, 1 check or run failure, 2 configuration error.

#include "cli_support.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>

namespace {

using CommandFn = std::function<int(const cli::CommonArgs&)>;

void add_command(CLI::App& app, int& rc, const std::string& name,
                 const std::string& description, const CommandFn& fn) {
  CLI::App* sub = app.add_subcommand(name, description);
  auto args = std::make_shared<cli::CommonArgs>();
  sub->add_option("--config", args->config_path, "JSON configuration file");
  CLI::Option* seed_opt =
      sub->add_option("--seed", args->seed, "master seed (overrides the config)");
  sub->add_option("--out", args->out_dir, "output directory")->capture_default_str();
  sub->add_option("--threads", args->threads, "concurrent benchmark cells")
      ->capture_default_str();
  sub->callback([&rc, args, seed_opt, fn] {
    args->seed_set = seed_opt->count() > 0;
    rc = fn(*args);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-fidelity Gaussian-process surrogate bench tool"};
  app.require_subcommand(1);
  int rc = cli::kExitOk;

  add_command(app, rc, "fit", "fit the surrogate to a dataset CSV", cli::cmd_fit);
  add_command(app, rc, "design", "generate a budget-matched design", cli::cmd_design);
  add_command(app, rc, "al-run", "run the cost-aware active-learning loop",
              cli::cmd_al_run);
  add_command(app, rc, "one-shot", "evaluate a full design up front and fit once",
              cli::cmd_one_shot);
  add_command(app, rc, "benchmark", "run the multi-method comparison study",
              cli::cmd_benchmark);
  add_command(app, rc, "validate-integrals",
              "check closed-form integrals against quadrature", cli::cmd_validate_integrals);
  add_command(app, rc, "criterion-surface",
              "emit the acquisition-criterion surface on a grid", cli::cmd_criterion_surface);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return cli::kExitConfigError;
  } catch (const cli::cli_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitCheckFailure;
  }
  return rc;
}
