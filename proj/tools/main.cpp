#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "run_config.hpp"

namespace {

using lrpq::cli::RunConfig;

/// Raw flag values per subcommand, applied after config file and environment
/// so the command line always wins.
struct CommonFlags {
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  CLI::Option* figures = nullptr;
  std::string config_path;

  void attach(CLI::App* app) {
    static const std::pair<const char*, const char*> kFlagKeys[] = {
        {"--tau", "tau"},
        {"--ranks", "ranks"},
        {"--pca-ranks", "pca_ranks"},
        {"--r-max", "r_max"},
        {"--nu-scale", "nu_scale"},
        {"--rho", "admm.rho"},
        {"--max-iter", "admm.max_iter"},
        {"--tol", "admm.tol"},
        {"--adapt-rho", "admm.adapt_rho"},
        {"--bandwidth", "kernel.bandwidth"},
        {"--h-scale", "kernel.h_scale"},
        {"--lag-window", "kernel.lag_window"},
        {"--alphas", "alphas"},
        {"--seed", "seed"},
        {"--n-splits", "n_splits"},
        {"--workers", "workers"},
        {"--out", "out"}};
    for (const auto& [flag, key] : kFlagKeys) {
      options[key] = app->add_option(flag, raw[key]);
    }
    figures = app->add_flag("--figures");
    app->add_option("--config", config_path, "INI-style configuration file");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) lrpq::cli::apply_config_file(config, config_path);
    lrpq::cli::apply_env(config);
    for (const auto& [key, option] : options) {
      if (option->count() > 0) lrpq::cli::apply_key(config, key, raw.at(key));
    }
    if (figures->count() > 0) config.figures = true;
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank panel quantile regression"};
  app.require_subcommand(1);

  auto* estimate = app.add_subcommand(
      "estimate", "fit the three-stage estimator on a panel CSV");
  std::string estimate_data;
  estimate->add_option("--data", estimate_data, "long CSV: unit,time,y,x1[,...]")
      ->required();
  CommonFlags estimate_flags;
  estimate_flags.attach(estimate);

  auto* test = app.add_subcommand(
      "test", "run slope specification tests on a panel CSV");
  std::string test_data;
  test->add_option("--data", test_data)->required();
  CommonFlags test_flags;
  test_flags.attach(test);

  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo table for one design cell");
  lrpq::cli::SimulateArgs sim;
  long long sim_n = 0;
  long long sim_t = 0;
  simulate->add_option("--dgp", sim.dgp)->required();
  simulate->add_option("--table", sim.table,
                       "rmse, rank, homog, or additive");
  simulate->add_option("--N", sim_n)->required();
  simulate->add_option("--T", sim_t)->required();
  simulate->add_option("--reps", sim.reps);
  simulate->add_option("--alpha", sim.alpha, "rejection level for test tables");
  simulate->add_flag("--emit-draw", sim.emit_draw,
                     "also write one simulated panel as draw.csv");
  CommonFlags simulate_flags;
  simulate_flags.attach(simulate);

  auto* cv_table = app.add_subcommand(
      "cv-table", "Gumbel critical values for the sup-type tests");
  long long cv_n = 0;
  long long cv_nt = 0;
  cv_table->add_option("--n", cv_n, "cross-section size for the unit test")
      ->required();
  cv_table->add_option("--nt", cv_nt, "panel size N*T for the additive test");
  CommonFlags cv_flags;
  cv_flags.attach(cv_table);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    return app.exit(error);
  }

  try {
    if (estimate->parsed()) {
      return lrpq::cli::cmd_estimate(estimate_flags.resolve(), estimate_data);
    }
    if (test->parsed()) {
      return lrpq::cli::cmd_test(test_flags.resolve(), test_data);
    }
    if (simulate->parsed()) {
      sim.n = static_cast<lrpq::Index>(sim_n);
      sim.t = static_cast<lrpq::Index>(sim_t);
      return lrpq::cli::cmd_simulate(simulate_flags.resolve(), sim);
    }
    if (cv_table->parsed()) {
      return lrpq::cli::cmd_cv_table(cv_flags.resolve(),
                                     static_cast<lrpq::Index>(cv_n),
                                     static_cast<lrpq::Index>(cv_nt));
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return lrpq::cli::kExitError;
  }
  return lrpq::cli::kExitError;
}
