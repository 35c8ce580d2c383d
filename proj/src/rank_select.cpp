#include "lrpq/rank_select.hpp"

#include "lrpq/lowrank.hpp"

#include <cmath>

namespace lrpq {

RankDecision estimate_rank_detail(const Mat& theta, double nu) {
  if (nu <= 0.0) throw std::invalid_argument("estimate_rank: nu must be positive");
  RankDecision out;
  SvdTriple svd = thin_svd(theta);
  out.singular_values = svd.D;
  const double op = svd.D.size() == 0 ? 0.0 : svd.D[0];
  if (op == 0.0) {
    out.zero_matrix = true;
    return out;
  }
  const double nt = static_cast<double>(theta.rows() * theta.cols());
  out.threshold = 0.6 * std::sqrt(nt * nu * op);
  for (Index m = 0; m < svd.D.size(); ++m)
    if (svd.D[m] >= out.threshold) ++out.k_hat;
  return out;
}

int estimate_rank(const Mat& theta, double nu) { return estimate_rank_detail(theta, nu).k_hat; }

RankEstimate estimate_all_ranks(const Mat& y, const std::vector<Mat>& x,
                                const QuantileIndex& tau, const NnrConfig& config) {
  NnrFit fit = fit_nnr(y, x, tau, config);
  RankEstimate out;
  const std::size_t blocks = fit.theta.size();
  out.k_hat.reserve(blocks);
  for (std::size_t j = 0; j < blocks; ++j) {
    RankDecision d = estimate_rank_detail(fit.theta[j], fit.diagnostics.nu[j]);
    out.k_hat.push_back(d.k_hat);
    out.thresholds.push_back(d.threshold);
    out.singular_values.push_back(d.singular_values);
    out.zero_flags.push_back(d.zero_matrix);
  }
  out.theta_tilde = std::move(fit.theta);
  out.fit_diagnostics = std::move(fit.diagnostics);
  return out;
}

}  // namespace lrpq
