#include "panel_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace lrpq::cli {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_full_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

double parse_numeric_field(const std::string& text, std::size_t line_no,
                           const std::string& column) {
  double value = 0.0;
  if (!parse_full_double(text, value)) {
    throw NonNumericField("line " + std::to_string(line_no) + ", column " +
                          column + ": '" + text + "' is not a number");
  }
  return value;
}

struct Record {
  std::string unit;
  std::string time;
  std::vector<double> values;
};

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

PanelData ingest_panel(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(file, line)) {
    throw std::runtime_error("'" + path + "' is empty");
  }
  auto header = split_csv_line(line);
  for (auto& h : header) h = strip(h);
  if (header.size() < 3 || header[0] != "unit" || header[1] != "time" ||
      header[2] != "y") {
    throw std::runtime_error("'" + path +
                             "': header must start with unit,time,y");
  }
  const std::size_t n_cols = header.size();
  const std::size_t n_regressors = n_cols - 3;

  std::vector<Record> records;
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != n_cols) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(n_cols) + " fields, got " +
                               std::to_string(fields.size()));
    }
    Record rec;
    rec.unit = strip(fields[0]);
    rec.time = strip(fields[1]);
    rec.values.reserve(n_cols - 2);
    for (std::size_t c = 2; c < n_cols; ++c) {
      rec.values.push_back(parse_numeric_field(strip(fields[c]), line_no, header[c]));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw std::runtime_error("'" + path + "' has no data rows");

  std::vector<std::string> unit_labels;
  std::unordered_map<std::string, Index> unit_index;
  for (const auto& rec : records) {
    if (unit_index.emplace(rec.unit, static_cast<Index>(unit_labels.size())).second) {
      unit_labels.push_back(rec.unit);
    }
  }

  std::vector<std::string> time_labels;
  {
    std::unordered_map<std::string, bool> seen;
    for (const auto& rec : records) {
      if (seen.emplace(rec.time, true).second) time_labels.push_back(rec.time);
    }
    bool all_numeric = true;
    std::vector<double> keys(time_labels.size());
    for (std::size_t k = 0; k < time_labels.size(); ++k) {
      if (!parse_full_double(time_labels[k], keys[k])) {
        all_numeric = false;
        break;
      }
    }
    if (all_numeric) {
      std::vector<std::size_t> order(time_labels.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
      std::vector<std::string> sorted;
      sorted.reserve(order.size());
      for (auto k : order) sorted.push_back(time_labels[k]);
      time_labels = std::move(sorted);
    } else {
      std::sort(time_labels.begin(), time_labels.end());
    }
  }
  std::unordered_map<std::string, Index> time_index;
  for (std::size_t k = 0; k < time_labels.size(); ++k) {
    time_index.emplace(time_labels[k], static_cast<Index>(k));
  }

  const Index n = static_cast<Index>(unit_labels.size());
  const Index t_len = static_cast<Index>(time_labels.size());
  PanelData data;
  data.unit_labels = std::move(unit_labels);
  data.time_labels = std::move(time_labels);
  data.regressor_names.assign(header.begin() + 3, header.end());
  data.y.resize(n, t_len);
  data.x.assign(n_regressors, Mat(n, t_len));
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> filled(n, t_len);
  filled.setConstant(false);

  for (const auto& rec : records) {
    const Index i = unit_index.at(rec.unit);
    const Index t = time_index.at(rec.time);
    if (filled(i, t)) {
      throw DuplicateCell("unit '" + rec.unit + "', time '" + rec.time +
                          "' appears more than once");
    }
    filled(i, t) = true;
    data.y(i, t) = rec.values[0];
    for (std::size_t j = 0; j < n_regressors; ++j) data.x[j](i, t) = rec.values[j + 1];
  }

  if (!filled.all()) {
    std::string missing;
    int shown = 0;
    for (Index i = 0; i < n && shown < 5; ++i) {
      for (Index t = 0; t < t_len && shown < 5; ++t) {
        if (filled(i, t)) continue;
        if (!missing.empty()) missing += ", ";
        missing += "(" + data.unit_labels[i] + ", " + data.time_labels[t] + ")";
        ++shown;
      }
    }
    const auto total = static_cast<long long>((filled.cast<int>().array() == 0).count());
    throw UnbalancedPanel("panel is missing " + std::to_string(total) +
                          " cell(s): " + missing +
                          (total > shown ? ", ..." : ""));
  }
  return data;
}

void emit_panel(const PanelData& data, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << "unit,time,y";
  for (std::size_t j = 0; j < data.x.size(); ++j) {
    if (j < data.regressor_names.size() && !data.regressor_names[j].empty()) {
      file << ',' << data.regressor_names[j];
    } else {
      file << ",x" << (j + 1);
    }
  }
  file << '\n';
  for (Index i = 0; i < data.n_units(); ++i) {
    for (Index t = 0; t < data.n_periods(); ++t) {
      file << data.unit_labels[i] << ',' << data.time_labels[t] << ','
           << format_double(data.y(i, t));
      for (const auto& xj : data.x) file << ',' << format_double(xj(i, t));
      file << '\n';
    }
  }
}

void write_matrix_csv(const Mat& matrix, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  for (Index i = 0; i < matrix.rows(); ++i) {
    for (Index t = 0; t < matrix.cols(); ++t) {
      if (t > 0) file << ',';
      file << format_double(matrix(i, t));
    }
    file << '\n';
  }
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row.push_back(parse_numeric_field(strip(fields[c]), line_no,
                                        std::to_string(c + 1)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": ragged row in '" + path + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat(0, 0);
  Mat out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index t = 0; t < out.cols(); ++t) out(i, t) = rows[i][t];
  }
  return out;
}

}  // namespace lrpq::cli
