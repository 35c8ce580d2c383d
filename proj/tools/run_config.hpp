#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrpq/nnr_admm.hpp"

namespace lrpq::cli {

/// Every tunable shared by the CLI commands.  Values are layered in order
/// defaults < config file < LRPQ_* environment < command-line flags.
struct RunConfig {
  std::vector<double> taus{0.5};
  std::vector<int> ranks;
  std::vector<int> pca_ranks;
  int r_max = 0;
  double nu_scale = 1.0;
  double rho = 1.0;
  int max_iter = 2000;
  double tol = 1e-6;
  bool adapt_rho = true;
  double bandwidth = 0.0;
  double h_scale = 1.06;
  int lag_window = 0;
  std::vector<double> alphas{0.01, 0.05, 0.10};
  std::uint64_t seed = 0;
  int n_splits = 1;
  int workers = 1;
  std::string out_dir = "lrpq_out";
  bool figures = false;

  void validate() const;
  NnrConfig nnr_config() const;
};

/// Assigns one dotted key (the config-file spelling) from its string value.
/// Throws std::invalid_argument for unknown keys or unparseable values.
void apply_key(RunConfig& config, const std::string& key, const std::string& value);

/// Reads an INI-style file: `key = value` lines, `[section]` headers that
/// prefix following keys as `section.key`, `#` or `;` comments.
void apply_config_file(RunConfig& config, const std::string& path);

/// Applies LRPQ_* environment variables; LRPQ_ADMM_RHO maps to admm.rho.
/// Unknown LRPQ_* variables are rejected like unknown file keys.
void apply_env(RunConfig& config);

/// All recognized dotted keys, for diagnostics and the env scan.
const std::vector<std::string>& known_keys();

}  // namespace lrpq::cli
