#pragma once

#include <string>

#include "run_config.hpp"

namespace lrpq::cli {

/// Exit codes: 0 success, 2 finished with convergence warnings, 1 error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct SimulateArgs {
  int dgp = 1;
  std::string table = "rmse";
  Index n = 0;
  Index t = 0;
  int reps = 100;
  double alpha = 0.05;
  bool emit_draw = false;
};

int cmd_estimate(const RunConfig& config, const std::string& data_path);
int cmd_test(const RunConfig& config, const std::string& data_path);
int cmd_simulate(const RunConfig& config, const SimulateArgs& args);
int cmd_cv_table(const RunConfig& config, Index n, Index nt);

}  // namespace lrpq::cli
