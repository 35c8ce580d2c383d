#pragma once

#include <string>
#include <vector>

#include "lrpq/montecarlo.hpp"
#include "lrpq/spec_tests.hpp"
#include "lrpq/three_stage.hpp"

namespace lrpq::cli {

void ensure_dir(const std::string& path);

/// ranks.json: selected ranks plus the selection diagnostics when the ranks
/// were estimated rather than supplied.
void write_ranks_json(const EstimationResult& result, bool estimated,
                      const std::string& path);

/// tests.json: one object per test with the statistic, Gumbel centering,
/// critical values keyed by level, p-value, and per-combination components.
void write_tests_json(const std::vector<TestResult>& tests,
                      const std::vector<int>& slopes, const std::string& path);

/// Simulation tables as CSV (one row per design cell) and JSON.
void write_table_csv(const TableResult& table, const std::string& path);
void write_table_json(const TableResult& table, int table_number,
                      const std::string& path);

/// Coefficient and factor estimates for one fitted quantile.
void write_estimate_csvs(const EstimationResult& result, const std::string& dir);

std::string alpha_label(double alpha);
int table_number_for(TableKind kind);
std::string table_kind_name(TableKind kind);

}  // namespace lrpq::cli
