#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lrpq/types.hpp"

namespace lrpq::cli {

/// A cell (unit, time) appears more than once in the input file.
struct DuplicateCell : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Some (unit, time) combinations are missing; the panel must be balanced.
struct UnbalancedPanel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A field that should hold a number does not parse as one.
struct NonNumericField : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Balanced panel in matrix form: y and each regressor are N x T, with
/// unit labels indexing rows and time labels indexing columns.
struct PanelData {
  Mat y;
  std::vector<Mat> x;
  std::vector<std::string> unit_labels;
  std::vector<std::string> time_labels;
  std::vector<std::string> regressor_names;

  Index n_units() const { return y.rows(); }
  Index n_periods() const { return y.cols(); }
  Index n_regressors() const { return static_cast<Index>(x.size()); }
};

/// Reads a long-format CSV with header `unit,time,y,x1[,x2,...]`.  Units keep
/// their order of first appearance; times are sorted numerically when every
/// label parses as a number and lexically otherwise.  Throws DuplicateCell,
/// UnbalancedPanel, or NonNumericField on malformed input.
PanelData ingest_panel(const std::string& path);

/// Writes the long-format CSV back out.  Values are printed with enough
/// digits that a read/write/read cycle reproduces the doubles bit for bit.
void emit_panel(const PanelData& data, const std::string& path);

/// Plain rectangular CSV of doubles, no header.
void write_matrix_csv(const Mat& matrix, const std::string& path);
Mat read_matrix_csv(const std::string& path);

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double value);

}  // namespace lrpq::cli
