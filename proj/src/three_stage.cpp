#include "lrpq/three_stage.hpp"

#include "lrpq/lowrank.hpp"
#include "lrpq/parallel.hpp"
#include "lrpq/pinball.hpp"
#include "lrpq/quantile_solver.hpp"
#include "lrpq/rng.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace lrpq {

namespace {

constexpr std::uint64_t kSplitSeedStream = 0x53504c4954ULL;  // "SPLIT"

Index total_rank(const std::vector<Mat>& blocks) {
  Index k = 0;
  for (const Mat& b : blocks) k += b.cols();
  return k;
}

std::vector<Mat> zero_blocks(Index rows, const std::vector<Mat>& like) {
  std::vector<Mat> out;
  out.reserve(like.size());
  for (const Mat& b : like) out.push_back(Mat::Zero(rows, b.cols()));
  return out;
}

// Design for unit i's time series: the intercept factor block as is, block
// j >= 1 scaled rowwise by the unit's covariate path covs[j-1].row(i).
Mat unit_design(const std::vector<Mat>& time_factors, const std::vector<Mat>& covs, Index i) {
  const Index t_len = time_factors.front().rows();
  Mat design(t_len, total_rank(time_factors));
  Index offset = 0;
  for (std::size_t j = 0; j < time_factors.size(); ++j) {
    const Index k = time_factors[j].cols();
    if (k == 0) continue;
    if (j == 0) {
      design.middleCols(offset, k) = time_factors[j];
    } else {
      design.middleCols(offset, k) =
          time_factors[j].array().colwise() * covs[j - 1].row(i).transpose().array();
    }
    offset += k;
  }
  return design;
}

// Design for period t over the listed units: loading rows scaled by the
// covariate values at t.
Mat time_design(const std::vector<Mat>& unit_loadings, const std::vector<Mat>& covs,
                const std::vector<Index>& obs_rows, Index t) {
  const Index m = static_cast<Index>(obs_rows.size());
  Mat design(m, total_rank(unit_loadings));
  for (Index r = 0; r < m; ++r) {
    const Index i = obs_rows[static_cast<std::size_t>(r)];
    Index offset = 0;
    for (std::size_t j = 0; j < unit_loadings.size(); ++j) {
      const Index k = unit_loadings[j].cols();
      if (k == 0) continue;
      const double w = j == 0 ? 1.0 : covs[j - 1](i, t);
      design.row(r).segment(offset, k) = unit_loadings[j].row(i) * w;
      offset += k;
    }
  }
  return design;
}

void scatter_row(const Vec& beta, Index row, std::vector<Mat>& blocks) {
  Index offset = 0;
  for (Mat& b : blocks) {
    const Index k = b.cols();
    if (k > 0) b.row(row) = beta.segment(offset, k).transpose();
    offset += k;
  }
}

// One quantile regression per listed unit; writes loadings into preallocated
// zero blocks so unlisted rows stay zero.
void fit_loading_rows(const Mat& response, const std::vector<Mat>& covs,
                      const std::vector<Mat>& time_factors, const QuantileIndex& tau,
                      const std::vector<Index>& rows, int workers, const char* label,
                      std::vector<Mat>& out_blocks) {
  parallel_for(rows.size(), workers, [&](std::size_t r) {
    const Index i = rows[r];
    try {
      QrProblem problem(unit_design(time_factors, covs, i), response.row(i).transpose(), tau);
      scatter_row(solve_qr(problem).beta, i, out_blocks);
    } catch (const RankDeficientDesign& e) {
      throw RankDeficientDesign(std::string(label) + ", unit " + std::to_string(i) + ": " +
                                e.what());
    }
  });
}

// One quantile regression per period over the listed units.
void fit_factor_cols(const Mat& response, const std::vector<Mat>& covs,
                     const std::vector<Mat>& unit_loadings, const QuantileIndex& tau,
                     const std::vector<Index>& obs_rows, int workers, const char* label,
                     std::vector<Mat>& out_blocks) {
  const Index m = static_cast<Index>(obs_rows.size());
  parallel_for(static_cast<std::size_t>(response.cols()), workers, [&](std::size_t tt) {
    const Index t = static_cast<Index>(tt);
    Vec y_t(m);
    for (Index r = 0; r < m; ++r) y_t[r] = response(obs_rows[static_cast<std::size_t>(r)], t);
    try {
      QrProblem problem(time_design(unit_loadings, covs, obs_rows, t), std::move(y_t), tau);
      scatter_row(solve_qr(problem).beta, t, out_blocks);
    } catch (const RankDeficientDesign& e) {
      throw RankDeficientDesign(std::string(label) + ", period " + std::to_string(t) + ": " +
                                e.what());
    }
  });
}

Mat rows_subset(const Mat& m, const std::vector<Index>& rows) {
  Mat out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

// Y minus each regressor's common component weighted by the current
// coefficient product u v'.
Mat remove_common_fit(const Mat& y, const std::vector<PcaFit>& pca, const std::vector<Mat>& u,
                      const std::vector<Mat>& v) {
  Mat out = y;
  for (std::size_t j = 1; j < u.size(); ++j) {
    if (u[j].cols() == 0) continue;
    out -= pca[j - 1].common.cwiseProduct(u[j] * v[j].transpose());
  }
  return out;
}

double full_sample_objective(const Mat& y, const std::vector<Mat>& x,
                             const CoefficientSet& theta, double tau) {
  Mat resid = y - theta[0];
  for (std::size_t j = 0; j < x.size(); ++j) resid -= x[j].cwiseProduct(theta[j + 1]);
  return mean_check_loss(resid, tau);
}

struct SplitRun {
  SampleSplit split;
  ComboEstimates combos;
  std::vector<NnrDiagnostics> stage1_diagnostics;
  CoefficientSet theta_hat;
  double objective = std::numeric_limits<double>::infinity();
};

SplitRun run_split(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                   const std::vector<int>& ranks, const std::vector<PcaFit>& pca,
                   const NnrConfig& nnr, SampleSplit split, int workers) {
  const std::size_t p = x.size();
  SplitRun run;
  run.split = std::move(split);

  std::array<StageOneFactors, 3> first_stage;
  for (int b = 1; b <= 3; ++b) {
    std::vector<Mat> x_rows;
    x_rows.reserve(p);
    for (const Mat& xj : x) x_rows.push_back(rows_subset(xj, run.split.group(b)));
    first_stage[b - 1] =
        stage1(rows_subset(y, run.split.group(b)), x_rows, tau, nnr, ranks);
    run.stage1_diagnostics.push_back(first_stage[b - 1].diagnostics);
  }

  run.combos.reserve(kCombos.size());
  for (const ComboId& id : kCombos) {
    const std::vector<Index>& second_rows = run.split.group(id.second());
    const std::vector<Index>& target_rows = run.split.group(id.target);
    StageTwoEstimates s2 = stage2(y, x, tau, first_stage[id.first - 1].factors, second_rows,
                                  target_rows, workers);
    StageThreeEstimates s3 =
        stage3(y, x, tau, s2.udot_target, s2.vdot, pca, target_rows, workers);
    run.combos.push_back(ComboEstimate{id, std::move(s3.u_hat), std::move(s3.v_hat)});
  }

  run.theta_hat.assign(p + 1, Mat());
  for (std::size_t j = 0; j <= p; ++j) {
    Mat sum = Mat::Zero(y.rows(), y.cols());
    for (const ComboEstimate& c : run.combos) {
      if (c.u_hat[j].cols() == 0) continue;
      sum += c.u_hat[j] * c.v_hat[j].transpose();
    }
    run.theta_hat[j] = 0.5 * sum;
  }
  run.objective = full_sample_objective(y, x, run.theta_hat, tau);
  return run;
}

}  // namespace

SampleSplit split_sample(Index n_units, std::uint64_t seed) {
  if (n_units < 6)
    throw TooFewUnits("split_sample: need at least 6 units, got " + std::to_string(n_units));
  std::vector<Index> order(static_cast<std::size_t>(n_units));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(mix_seed(seed, kSplitSeedStream));
  for (Index i = n_units - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  SampleSplit split;
  split.seed = seed;
  split.membership.assign(static_cast<std::size_t>(n_units), 0);
  const Index base = n_units / 3;
  const Index rem = n_units - 3 * base;
  std::array<Index, 3> sizes{base + (rem > 0 ? 1 : 0), base + (rem > 1 ? 1 : 0), base};
  std::size_t next = 0;
  for (int g = 0; g < 3; ++g) {
    auto& group = split.groups[static_cast<std::size_t>(g)];
    group.assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                 order.begin() + static_cast<std::ptrdiff_t>(next + sizes[g]));
    std::sort(group.begin(), group.end());
    for (Index unit : group) split.membership[static_cast<std::size_t>(unit)] = g + 1;
    next += static_cast<std::size_t>(sizes[g]);
  }
  return split;
}

StageOneFactors stage1(const Mat& y_rows, const std::vector<Mat>& x_rows,
                       const QuantileIndex& tau, const NnrConfig& config,
                       const std::vector<int>& ranks) {
  if (ranks.size() != x_rows.size() + 1)
    throw ShapeMismatch("stage1: " + std::to_string(ranks.size()) + " ranks for " +
                        std::to_string(x_rows.size() + 1) + " blocks");
  for (int k : ranks)
    if (k < 0) throw KOutOfRange("stage1: rank " + std::to_string(k) + " below zero");

  NnrFit fit = fit_nnr(y_rows, x_rows, tau, config);
  StageOneFactors out;
  out.factors.reserve(ranks.size());
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    if (ranks[j] == 0) {
      out.factors.emplace_back(Mat(y_rows.cols(), 0));
    } else {
      out.factors.push_back(factor_decompose(fit.theta[j], ranks[j]).factors);
    }
  }
  out.diagnostics = std::move(fit.diagnostics);
  return out;
}

StageTwoEstimates stage2(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                         const std::vector<Mat>& factors, const std::vector<Index>& second_rows,
                         const std::vector<Index>& target_rows, int workers) {
  if (factors.size() != x.size() + 1)
    throw ShapeMismatch("stage2: " + std::to_string(factors.size()) + " factor blocks for " +
                        std::to_string(x.size() + 1) + " coefficient blocks");
  for (const Mat& f : factors)
    if (f.rows() != y.cols())
      throw ShapeMismatch("stage2: factor block with " + std::to_string(f.rows()) +
                          " periods, panel has " + std::to_string(y.cols()));

  StageTwoEstimates out;
  out.udot_second = zero_blocks(y.rows(), factors);
  fit_loading_rows(y, x, factors, tau, second_rows, workers, "stage2 row regression",
                   out.udot_second);
  out.vdot = zero_blocks(y.cols(), factors);
  fit_factor_cols(y, x, out.udot_second, tau, second_rows, workers, "stage2 column regression",
                  out.vdot);
  out.udot_target = zero_blocks(y.rows(), factors);
  fit_loading_rows(y, x, out.vdot, tau, target_rows, workers, "stage2 target row regression",
                   out.udot_target);
  return out;
}

StageThreeEstimates stage3(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                           const std::vector<Mat>& udot, const std::vector<Mat>& vdot,
                           const std::vector<PcaFit>& pca, const std::vector<Index>& target_rows,
                           int workers) {
  if (pca.size() != x.size())
    throw ShapeMismatch("stage3: " + std::to_string(pca.size()) + " PCA fits for " +
                        std::to_string(x.size()) + " regressors");
  for (const PcaFit& f : pca) {
    require_same_shape(y, f.common, "stage3 PCA common component");
    require_same_shape(y, f.residual, "stage3 PCA residual");
  }

  std::vector<Mat> resid;
  resid.reserve(pca.size());
  for (const PcaFit& f : pca) resid.push_back(f.residual);

  StageThreeEstimates out;
  out.u_hat = zero_blocks(y.rows(), vdot);
  const Mat y_tilde = remove_common_fit(y, pca, udot, vdot);
  fit_loading_rows(y_tilde, resid, vdot, tau, target_rows, workers, "stage3 row regression",
                   out.u_hat);
  out.v_hat = zero_blocks(y.cols(), vdot);
  const Mat y_hat = remove_common_fit(y, pca, out.u_hat, vdot);
  fit_factor_cols(y_hat, resid, out.u_hat, tau, target_rows, workers, "stage3 column regression",
                  out.v_hat);
  return out;
}

EstimationResult estimate(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
                          const ThreeStageOptions& options) {
  require_finite(y, "estimate Y");
  for (const Mat& xj : x) {
    require_same_shape(y, xj, "estimate regressor");
    require_finite(xj, "estimate regressor");
  }
  options.nnr.validate();
  if (options.n_splits < 1) throw std::invalid_argument("estimate: n_splits must be >= 1");
  if (options.workers < 1) throw std::invalid_argument("estimate: workers must be >= 1");

  const Index n = y.rows();
  const Index t = y.cols();
  const std::size_t p = x.size();

  EstimationResult out;
  out.tau = tau.value();

  std::vector<int> ranks = options.ranks;
  if (ranks.empty()) {
    RankEstimate detail = estimate_all_ranks(y, x, tau, options.nnr);
    ranks = detail.k_hat;
    if (!detail.fit_diagnostics.converged)
      out.warnings.push_back("rank selection: full-sample fit did not converge");
    out.rank_detail = std::move(detail);
  } else if (ranks.size() != p + 1) {
    throw ShapeMismatch("estimate: " + std::to_string(ranks.size()) + " ranks for " +
                        std::to_string(p + 1) + " blocks");
  }
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    if (ranks[j] < 0 || ranks[j] > std::min(n, t))
      throw KOutOfRange("estimate: rank " + std::to_string(ranks[j]) + " for block " +
                        std::to_string(j) + " outside [0, " +
                        std::to_string(std::min(n, t)) + "]");
    if (ranks[j] == 0)
      out.warnings.push_back("block " + std::to_string(j) +
                             " has rank 0: its coefficient matrix is fixed at zero");
  }
  out.k_hat = ranks;
  if (std::accumulate(ranks.begin(), ranks.end(), 0) == 0)
    throw KOutOfRange("estimate: every block has rank 0, nothing to estimate");

  std::vector<int> pca_ranks = options.pca_ranks;
  if (pca_ranks.empty()) {
    const Index cap = options.r_max > 0 ? options.r_max : std::min<Index>(8, std::min(n, t) - 1);
    for (std::size_t j = 0; j < p; ++j) {
      FactorCount count = estimate_num_factors_detail(x[j], cap);
      if (count.low_confidence)
        out.warnings.push_back("regressor " + std::to_string(j + 1) +
                               ": factor count chosen with a weak eigenvalue-ratio signal");
      pca_ranks.push_back(count.r);
      out.pca_detail.push_back(count);
    }
  } else if (pca_ranks.size() != p) {
    throw ShapeMismatch("estimate: " + std::to_string(pca_ranks.size()) +
                        " factor counts for " + std::to_string(p) + " regressors");
  }
  out.pca.reserve(p);
  for (std::size_t j = 0; j < p; ++j) out.pca.push_back(pca_fit(x[j], pca_ranks[j]));

  SplitRun best;
  for (int s = 0; s < options.n_splits; ++s) {
    SampleSplit split = split_sample(n, mix_seed(options.seed, kSplitSeedStream, static_cast<std::uint64_t>(s)));
    SplitRun run = run_split(y, x, tau, ranks, out.pca, options.nnr, std::move(split),
                             options.workers);
    if (run.objective < best.objective) best = std::move(run);
  }

  out.theta_hat = std::move(best.theta_hat);
  out.combos = std::move(best.combos);
  out.split = std::move(best.split);
  out.stage1_diagnostics = std::move(best.stage1_diagnostics);
  out.objective = best.objective;
  for (const NnrDiagnostics& d : out.stage1_diagnostics)
    if (!d.converged) out.not_converged = true;
  if (out.not_converged)
    out.warnings.push_back("a stage-1 fit stopped at max_iter before reaching tolerance");
  return out;
}

}  // namespace lrpq
