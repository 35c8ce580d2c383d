#pragma once

#include "lrpq/nnr_admm.hpp"
#include "lrpq/pca.hpp"
#include "lrpq/rank_select.hpp"
#include "lrpq/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lrpq {

/// Random partition of the units into three near-equal groups I_1, I_2, I_3.
struct SampleSplit {
  std::array<std::vector<Index>, 3> groups;  // ascending unit ids per group
  std::vector<int> membership;               // unit -> group number 1, 2, or 3
  std::uint64_t seed = 0;

  const std::vector<Index>& group(int a) const { return groups.at(a - 1); }
  Index group_size(int a) const { return static_cast<Index>(groups.at(a - 1).size()); }
};

/// Uniform partition with sizes floor(N/3), remainders going to I_1 then I_2.
SampleSplit split_sample(Index n_units, std::uint64_t seed);

/// One of the six subsample assignments: step 1 fits on group `first`, step 2
/// runs its row and column regressions on group second(), step 3 debiases the
/// loadings of group `target`.
struct ComboId {
  int target = 0;  // a
  int first = 0;   // b
  int second() const { return 6 - target - first; }
  std::string label() const {
    return "(" + std::to_string(target) + "," + std::to_string(first) + ")";
  }
};

inline constexpr std::array<ComboId, 6> kCombos{
    {{3, 1}, {3, 2}, {2, 1}, {2, 3}, {1, 2}, {1, 3}}};

/// Factor and loading estimates from one combo. Block j of u_hat is N x K_j
/// with nonzero rows exactly on the target group; block j of v_hat covers all
/// periods. Block 0 is the intercept.
struct ComboEstimate {
  ComboId id;
  std::vector<Mat> u_hat;
  std::vector<Mat> v_hat;
};

using ComboEstimates = std::vector<ComboEstimate>;

struct StageOneFactors {
  std::vector<Mat> factors;  // p+1 blocks, T x K_j
  NnrDiagnostics diagnostics;
};

/// Regularized fit on the row subsample, then per-block factor extraction
/// with the sqrt(T) scaling. A zero rank yields an empty factor block.
StageOneFactors stage1(const Mat& y_rows, const std::vector<Mat>& x_rows,
                       const QuantileIndex& tau, const NnrConfig& config,
                       const std::vector<int>& ranks);

struct StageTwoEstimates {
  std::vector<Mat> udot_second;  // N x K_j, rows filled on the step-2 group
  std::vector<Mat> vdot;         // T x K_j, all periods
  std::vector<Mat> udot_target;  // N x K_j, rows filled on the step-3 group
};

/// Row regressions of Y on the stage-1 factors for the step-2 units, a column
/// regression per period on the resulting loadings, and a second pass of row
/// regressions on the refreshed factors for the target units.
StageTwoEstimates stage2(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                         const std::vector<Mat>& factors, const std::vector<Index>& second_rows,
                         const std::vector<Index>& target_rows, int workers = 1);

struct StageThreeEstimates {
  std::vector<Mat> u_hat;  // N x K_j, rows filled on the target group
  std::vector<Mat> v_hat;  // T x K_j
};

/// Debiasing pass: removes each regressor's common component scaled by the
/// current coefficient estimate from Y, then reruns the row and column
/// regressions with the idiosyncratic parts as covariates.
StageThreeEstimates stage3(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                           const std::vector<Mat>& udot, const std::vector<Mat>& vdot,
                           const std::vector<PcaFit>& pca, const std::vector<Index>& target_rows,
                           int workers = 1);

struct ThreeStageOptions {
  std::vector<int> ranks;      // K_j per block incl. intercept; empty -> SVT selection
  std::vector<int> pca_ranks;  // factors per regressor; empty -> eigenvalue-ratio rule
  Index r_max = 0;             // search bound for the ratio rule; 0 -> min(8, min(N,T)-1)
  NnrConfig nnr;
  int n_splits = 1;  // candidate splits; the one with minimal check loss wins
  std::uint64_t seed = 0;
  int workers = 1;
};

struct EstimationResult {
  CoefficientSet theta_hat;  // p+1 blocks; [0] is the intercept
  ComboEstimates combos;     // six entries in kCombos order
  SampleSplit split;
  std::vector<int> k_hat;                   // ranks actually used
  std::optional<RankEstimate> rank_detail;  // present when ranks were estimated
  std::vector<PcaFit> pca;                  // one per regressor
  std::vector<FactorCount> pca_detail;      // present when factor counts were estimated
  std::vector<NnrDiagnostics> stage1_diagnostics;  // per b = 1..3 for the chosen split
  double tau = 0.5;
  double objective = 0.0;  // full-sample mean check loss at theta_hat
  bool not_converged = false;
  std::vector<std::string> warnings;
};

/// Full pipeline: rank selection unless ranks are supplied, PCA of each
/// regressor, the six combos of stages 1-3 per candidate split, and the
/// combined estimate averaging each unit's two combo products.
EstimationResult estimate(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                          const ThreeStageOptions& options = {});

}  // namespace lrpq
