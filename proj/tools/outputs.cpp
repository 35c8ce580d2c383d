#include "outputs.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "panel_io.hpp"

namespace lrpq::cli {

using nlohmann::json;

void ensure_dir(const std::string& path) {
  std::filesystem::create_directories(path);
}

std::string alpha_label(double alpha) {
  char buffer[32];
  const double scaled = alpha * 100.0;
  if (std::abs(scaled - std::round(scaled)) < 1e-9) {
    std::snprintf(buffer, sizeof buffer, "%.2f", alpha);
  } else {
    std::snprintf(buffer, sizeof buffer, "%g", alpha);
  }
  return buffer;
}

int table_number_for(TableKind kind) {
  switch (kind) {
    case TableKind::rmse: return 2;
    case TableKind::rank: return 3;
    case TableKind::size_power_homog: return 4;
    case TableKind::size_power_additive: return 5;
  }
  return 0;
}

std::string table_kind_name(TableKind kind) {
  switch (kind) {
    case TableKind::rmse: return "rmse";
    case TableKind::rank: return "rank";
    case TableKind::size_power_homog: return "homog";
    case TableKind::size_power_additive: return "additive";
  }
  return "";
}

namespace {

void write_text(const json& doc, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << doc.dump(2) << '\n';
}

}  // namespace

void write_ranks_json(const EstimationResult& result, bool estimated,
                      const std::string& path) {
  json doc;
  doc["tau"] = result.tau;
  doc["k_hat"] = result.k_hat;
  doc["source"] = estimated ? "estimated" : "supplied";
  if (result.rank_detail) {
    const auto& detail = *result.rank_detail;
    doc["svt_constant"] = detail.svt_constant;
    doc["thresholds"] = detail.thresholds;
    json sv = json::array();
    for (const auto& block : detail.singular_values) {
      json values = json::array();
      for (Index m = 0; m < block.size(); ++m) values.push_back(block[m]);
      sv.push_back(std::move(values));
    }
    doc["singular_values"] = std::move(sv);
    doc["zero_flags"] = detail.zero_flags;
  }
  json pca = json::array();
  for (const auto& fit : result.pca) pca.push_back(fit.r);
  doc["pca_ranks"] = std::move(pca);
  if (!result.warnings.empty()) doc["warnings"] = result.warnings;
  write_text(doc, path);
}

void write_tests_json(const std::vector<TestResult>& tests,
                      const std::vector<int>& slopes, const std::string& path) {
  json doc = json::array();
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const auto& test = tests[k];
    json entry;
    entry["null"] = test.null_name;
    if (k < slopes.size()) entry["slope"] = slopes[k];
    entry["statistic"] = test.statistic;
    entry["b_n"] = test.b_n;
    json cv;
    for (std::size_t a = 0; a < test.alphas.size(); ++a) {
      cv[alpha_label(test.alphas[a])] = test.critical_values[a];
    }
    entry["cv"] = std::move(cv);
    entry["p_value"] = test.p_value;
    entry["combo_labels"] = test.combo_labels;
    entry["combo_components"] = test.combo_components;
    if (test.cells_skipped > 0) entry["cells_skipped"] = test.cells_skipped;
    if (!test.warnings.empty()) entry["warnings"] = test.warnings;
    doc.push_back(std::move(entry));
  }
  write_text(doc, path);
}

void write_table_csv(const TableResult& table, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << "dgp,N,T,tau";
  for (const auto& column : table.columns) file << ',' << column;
  file << '\n';
  for (const auto& cell : table.cells) {
    file << cell.spec.dgp << ',' << cell.spec.n << ',' << cell.spec.t << ','
         << format_double(cell.spec.tau);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      file << ',' << format_double(cell.metrics[c]);
    }
    file << '\n';
  }
}

void write_table_json(const TableResult& table, int table_number,
                      const std::string& path) {
  json doc;
  doc["table"] = table_number;
  doc["kind"] = table_kind_name(table.kind);
  doc["columns"] = table.columns;
  json cells = json::array();
  for (const auto& cell : table.cells) {
    json entry;
    entry["dgp"] = cell.spec.dgp;
    entry["N"] = cell.spec.n;
    entry["T"] = cell.spec.t;
    entry["tau"] = cell.spec.tau;
    json metrics;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      metrics[table.columns[c]] = cell.metrics[c];
    }
    entry["metrics"] = std::move(metrics);
    entry["reps"] = static_cast<int>(cell.draws.empty() ? 0 : cell.draws.front().size()) +
                    cell.failures;
    entry["failures"] = cell.failures;
    if (!cell.errors.empty()) entry["errors"] = cell.errors;
    cells.push_back(std::move(entry));
  }
  doc["cells"] = std::move(cells);
  write_text(doc, path);
}

void write_estimate_csvs(const EstimationResult& result, const std::string& dir) {
  ensure_dir(dir);
  for (std::size_t j = 0; j < result.theta_hat.size(); ++j) {
    write_matrix_csv(result.theta_hat[j],
                     dir + "/theta_hat_" + std::to_string(j) + ".csv");
  }
  for (const auto& combo : result.combos) {
    const std::string tag = std::to_string(combo.id.target) +
                            std::to_string(combo.id.first);
    for (std::size_t j = 0; j < combo.v_hat.size(); ++j) {
      if (combo.v_hat[j].cols() == 0) continue;
      write_matrix_csv(combo.v_hat[j], dir + "/factors_" + tag + "_" +
                                           std::to_string(j) + ".csv");
      write_matrix_csv(combo.u_hat[j], dir + "/loadings_" + tag + "_" +
                                           std::to_string(j) + ".csv");
    }
  }
}

}  // namespace lrpq::cli
