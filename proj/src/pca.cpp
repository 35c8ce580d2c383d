#include "lrpq/pca.hpp"

#include "lrpq/lowrank.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace lrpq {

PcaFit pca_fit(const Mat& x, Index r) {
  const Index max_rank = std::min(x.rows(), x.cols());
  if (r < 1 || r > max_rank)
    throw ROutOfRange("pca_fit: r " + std::to_string(r) + " outside [1, " +
                      std::to_string(max_rank) + "]");
  require_finite(x, "pca_fit");
  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Mat u = svd.matrixU().leftCols(r);
  Mat v = svd.matrixV().leftCols(r);
  Vec d = svd.singularValues().head(r);
  for (Index k = 0; k < r; ++k) {
    Index idx = 0;
    v.col(k).cwiseAbs().maxCoeff(&idx);
    if (v(idx, k) < 0.0) {
      v.col(k) = -v.col(k);
      u.col(k) = -u.col(k);
    }
  }
  const double sqrt_n = std::sqrt(static_cast<double>(x.rows()));
  PcaFit fit;
  fit.r = r;
  fit.loadings = sqrt_n * u;
  fit.factors = v * d.asDiagonal() / sqrt_n;
  fit.common = fit.loadings * fit.factors.transpose();
  fit.residual = x - fit.common;
  return fit;
}

FactorCount estimate_num_factors_detail(const Mat& x, Index r_max) {
  const Index max_rank = std::min(x.rows(), x.cols());
  if (r_max < 1 || r_max >= max_rank)
    throw ROutOfRange("estimate_num_factors: r_max " + std::to_string(r_max) +
                      " outside [1, " + std::to_string(max_rank) + ")");
  require_finite(x, "estimate_num_factors");
  Eigen::BDCSVD<Mat> svd(x);
  Vec d = svd.singularValues();
  FactorCount out;
  double best = -1.0;
  for (Index k = 0; k < r_max; ++k) {
    double ratio = d[k + 1] > 1e-14 * d[0] ? d[k] / d[k + 1]
                                           : std::numeric_limits<double>::infinity();
    if (ratio > best) {
      best = ratio;
      out.r = static_cast<int>(k) + 1;
    }
  }
  out.max_ratio = best;
  out.low_confidence = best < 2.0;
  return out;
}

int estimate_num_factors(const Mat& x, Index r_max) {
  return estimate_num_factors_detail(x, r_max).r;
}

}  // namespace lrpq
