#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "figures.hpp"
#include "lrpq/montecarlo.hpp"
#include "lrpq/spec_tests.hpp"
#include "lrpq/variance.hpp"
#include "outputs.hpp"
#include "panel_io.hpp"

namespace lrpq::cli {

namespace {

std::string tau_dir(const RunConfig& config, double tau) {
  if (config.taus.size() == 1) return config.out_dir;
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "tau_%g", tau);
  return config.out_dir + "/" + buffer;
}

ThreeStageOptions options_from(const RunConfig& config) {
  ThreeStageOptions options;
  options.ranks = config.ranks;
  options.pca_ranks = config.pca_ranks;
  options.r_max = config.r_max;
  options.nnr = config.nnr_config();
  options.n_splits = config.n_splits;
  options.seed = config.seed;
  options.workers = config.workers;
  return options;
}

void print_warnings(const EstimationResult& result) {
  for (const auto& warning : result.warnings) {
    std::cout << "  warning: " << warning << '\n';
  }
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ",";
    out += std::to_string(values[k]);
  }
  return out;
}

}  // namespace

int cmd_estimate(const RunConfig& config, const std::string& data_path) {
  config.validate();
  const PanelData data = ingest_panel(data_path);
  std::cout << "panel: " << data.n_units() << " units x " << data.n_periods()
            << " periods, " << data.n_regressors() << " regressor(s)\n";

  int rc = kExitOk;
  for (double tau : config.taus) {
    const std::string dir = tau_dir(config, tau);
    ensure_dir(dir);
    EstimationResult result =
        estimate(data.y, data.x, QuantileIndex(tau), options_from(config));
    write_estimate_csvs(result, dir);
    write_ranks_json(result, config.ranks.empty(), dir + "/ranks.json");
    if (config.figures) {
      for (std::size_t j = 0; j < result.theta_hat.size(); ++j) {
        if (result.combos.front().v_hat[j].cols() == 0) continue;
        write_factor_figure(result, static_cast<Index>(j),
                            dir + "/fig_factors_" + std::to_string(j) + ".svg");
      }
    }
    std::cout << "tau " << tau << ": k_hat = [" << join_ints(result.k_hat)
              << "], objective = " << result.objective << ", outputs in " << dir
              << '\n';
    print_warnings(result);
    if (result.not_converged) rc = kExitNotConverged;
  }
  return rc;
}

int cmd_test(const RunConfig& config, const std::string& data_path) {
  config.validate();
  const PanelData data = ingest_panel(data_path);

  int rc = kExitOk;
  for (double tau : config.taus) {
    const std::string dir = tau_dir(config, tau);
    ensure_dir(dir);
    EstimationResult result =
        estimate(data.y, data.x, QuantileIndex(tau), options_from(config));
    write_ranks_json(result, config.ranks.empty(), dir + "/ranks.json");
    print_warnings(result);
    if (result.not_converged) rc = kExitNotConverged;

    const Mat eps = residuals(data.y, data.x, result.theta_hat);
    const KernelSpec kernel = resolve_kernel(eps, config.bandwidth,
                                             config.lag_window, config.h_scale);
    std::vector<TestResult> tests;
    std::vector<int> slopes;
    for (Index j = 1; j <= data.n_regressors(); ++j) {
      if (result.k_hat[static_cast<std::size_t>(j)] == 0) {
        std::cout << "tau " << tau << ", slope " << j
                  << ": rank 0 block, tests skipped\n";
        continue;
      }
      const VarianceSet variance = variance_set(result, eps, result.pca, kernel, j);
      for (auto&& test :
           {test_homogeneity_u(result, variance.sigma_u, j, config.alphas),
            test_homogeneity_v(result, variance.sigma_v, j, config.alphas),
            test_additive(result, variance.sigma_u, variance.sigma_v, j,
                          config.alphas)}) {
        std::cout << "tau " << tau << ", slope " << j << ": " << test.null_name
                  << ", statistic = " << test.statistic
                  << ", p = " << test.p_value << '\n';
        for (const auto& warning : test.warnings) {
          std::cout << "  warning: " << warning << '\n';
        }
        tests.push_back(std::move(test));
        slopes.push_back(static_cast<int>(j));
      }
    }
    write_tests_json(tests, slopes, dir + "/tests.json");
    std::cout << "tau " << tau << ": wrote " << tests.size() << " test(s) to "
              << dir << "/tests.json\n";
  }
  return rc;
}

int cmd_simulate(const RunConfig& config, const SimulateArgs& args) {
  config.validate();
  TableKind kind;
  if (args.table == "rmse") {
    kind = TableKind::rmse;
  } else if (args.table == "rank") {
    kind = TableKind::rank;
  } else if (args.table == "homog") {
    kind = TableKind::size_power_homog;
  } else if (args.table == "additive") {
    kind = TableKind::size_power_additive;
  } else {
    throw std::invalid_argument("--table must be rmse, rank, homog, or additive");
  }

  CellSpec cell;
  cell.dgp = args.dgp;
  cell.n = args.n;
  cell.t = args.t;
  cell.tau = config.taus.front();

  TableOptions options;
  options.reps = args.reps;
  options.seed = config.seed;
  options.workers = config.workers;
  options.alpha = args.alpha;
  options.nnr = config.nnr_config();
  options.n_splits = config.n_splits;

  const TableResult table = run_table(kind, {cell}, options);
  ensure_dir(config.out_dir);
  const int number = table_number_for(kind);
  const std::string stem = config.out_dir + "/table" + std::to_string(number);
  write_table_csv(table, stem + ".csv");
  write_table_json(table, number, stem + ".json");

  int rc = kExitOk;
  for (const auto& out : table.cells) {
    std::cout << "dgp " << out.spec.dgp << " N=" << out.spec.n
              << " T=" << out.spec.t << " tau=" << out.spec.tau << ':';
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      std::cout << ' ' << table.columns[c] << '=' << out.metrics[c];
    }
    if (out.failures > 0) {
      std::cout << " (" << out.failures << " failed rep(s))";
      rc = kExitNotConverged;
      for (const auto& error : out.errors) {
        std::cout << "\n  rep error: " << error;
      }
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << stem << ".csv and " << stem << ".json\n";

  if (args.emit_draw) {
    DgpSpec spec;
    spec.id = args.dgp;
    spec.n = args.n;
    spec.t = args.t;
    spec.tau = config.taus.front();
    spec.seed = config.seed;
    const SimDraw draw = generate(spec);
    PanelData panel;
    panel.y = draw.y;
    panel.x = draw.x;
    for (Index i = 0; i < draw.y.rows(); ++i) {
      panel.unit_labels.push_back(std::to_string(i + 1));
    }
    for (Index t = 0; t < draw.y.cols(); ++t) {
      panel.time_labels.push_back(std::to_string(t + 1));
    }
    panel.regressor_names = {"x1", "x2"};
    emit_panel(panel, config.out_dir + "/draw.csv");
    std::cout << "wrote " << config.out_dir << "/draw.csv\n";
  }
  return rc;
}

int cmd_cv_table(const RunConfig& config, Index n, Index nt) {
  config.validate();
  const double b_n = gumbel_b(n);
  const double b_nt = nt > 0 ? gumbel_b(nt) : 0.0;
  std::printf("alpha  cv_u(N=%lld)  cv_v", static_cast<long long>(n));
  if (nt > 0) std::printf("  cv_add(NT=%lld)", static_cast<long long>(nt));
  std::printf("\n");
  for (double alpha : config.alphas) {
    const double tail = -std::log1p(-alpha);
    const double cv_u = 2.0 * b_n + 2.0 * std::log(1.0 / tail);
    const double cv_v = -std::log(tail / 3.0);
    std::printf("%-5s  %11.2f  %4.2f", alpha_label(alpha).c_str(), cv_u, cv_v);
    if (nt > 0) {
      const double cv_add = 2.0 * b_nt + 2.0 * std::log(1.0 / tail);
      std::printf("  %15.2f", cv_add);
    }
    std::printf("\n");
  }
  return kExitOk;
}

}  // namespace lrpq::cli
