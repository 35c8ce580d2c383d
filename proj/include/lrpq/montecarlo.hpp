#pragma once

#include "lrpq/nnr_admm.hpp"
#include "lrpq/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lrpq {

enum class ErrorFamily { iid_t3, ar1_t3 };

/// One simulation design: panel dimensions, quantile level, and the
/// generating structure selected by id.
struct DgpSpec {
  int id = 1;  // 1..6
  Index n = 0;
  Index t = 0;
  double tau = 0.5;
  std::uint64_t seed = 0;

  ErrorFamily error_family() const {
    return (id == 3 || id == 4 || id == 6) ? ErrorFamily::ar1_t3 : ErrorFamily::iid_t3;
  }
  std::vector<int> true_ranks() const {
    return id <= 4 ? std::vector<int>{1, 1, 1} : std::vector<int>{1, 2, 2};
  }
  void validate() const;
};

struct SimDraw {
  Mat y;
  std::vector<Mat> x;          // two regressor panels
  CoefficientSet theta_true;   // intercept and slopes at the requested tau
  std::vector<int> true_ranks;
};

double student_t3_cdf(double x);
double student_t3_quantile(double prob);

/// Quantile of the stationary error law: the scaled t quantile for the iid
/// family, a long-chain simulation cached per tau for the autoregressive one.
double quantile_of_error(ErrorFamily family, double tau);

SimDraw generate(const DgpSpec& spec);

/// Frobenius distance over sqrt(NT).
double rmse(const Mat& estimate, const Mat& truth);

enum class TableKind { rmse, rank, size_power_homog, size_power_additive };

struct CellSpec {
  int dgp = 1;
  Index n = 0;
  Index t = 0;
  double tau = 0.5;
};

struct TableOptions {
  int reps = 100;
  std::uint64_t seed = 0;
  int workers = 1;
  double alpha = 0.05;  // rejection level for the test tables
  NnrConfig nnr;
  int n_splits = 1;
};

struct TableCell {
  CellSpec spec;
  std::vector<double> metrics;              // means or frequencies per column
  std::vector<std::vector<double>> draws;   // per column, per surviving replication
  int failures = 0;
  std::vector<std::string> errors;          // first few failure messages
};

struct TableResult {
  TableKind kind;
  std::vector<std::string> columns;
  std::vector<TableCell> cells;
};

std::vector<std::string> table_columns(TableKind kind);

/// Seeded replication harness. Per-replication streams make the results
/// identical for any worker count; failed replications are counted and
/// excluded from the summaries.
TableResult run_table(TableKind kind, const std::vector<CellSpec>& cells,
                      const TableOptions& options);

}  // namespace lrpq
