#pragma once

#include "lrpq/nnr_admm.hpp"
#include "lrpq/types.hpp"

namespace lrpq {

struct RankDecision {
  int k_hat = 0;
  double threshold = 0.0;
  Vec singular_values;
  bool zero_matrix = false;
};

struct RankEstimate {
  std::vector<int> k_hat;  // p+1 entries, [0] is the intercept
  std::vector<double> thresholds;
  std::vector<Vec> singular_values;
  std::vector<bool> zero_flags;
  double svt_constant = 0.6;
  CoefficientSet theta_tilde;  // the full-sample fit the ranks came from
  NnrDiagnostics fit_diagnostics;
};

/// Counts singular values of theta at or above 0.6 * sqrt(N T nu ||theta||_op).
int estimate_rank(const Mat& theta, double nu);
RankDecision estimate_rank_detail(const Mat& theta, double nu);

/// Full-sample NNR fit followed by the counting rule per block.
RankEstimate estimate_all_ranks(const Mat& y, const std::vector<Mat>& x,
                                const QuantileIndex& tau, const NnrConfig& config);

}  // namespace lrpq
