#include "lrpq/lowrank.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace lrpq {
namespace {

// Thin SVD without the rank cutoff; factor_decompose needs the full basis
// even past the numerical rank.
SvdTriple raw_svd(const Mat& m, const char* what) {
  require_finite(m, what);
  Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdTriple out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index k = 0; k < out.Q.cols(); ++k) {
    Index idx = 0;
    out.Q.col(k).cwiseAbs().maxCoeff(&idx);
    if (out.Q(idx, k) < 0.0) {
      out.Q.col(k) = -out.Q.col(k);
      out.P.col(k) = -out.P.col(k);
    }
  }
  return out;
}

}  // namespace

SvdTriple thin_svd(const Mat& m) {
  SvdTriple out = raw_svd(m, "thin_svd");
  if (out.D.size() == 0) return out;
  const double cutoff = 1e-12 * out.D[0];
  Index r = 0;
  while (r < out.D.size() && out.D[r] > cutoff) ++r;
  out.P.conservativeResize(Eigen::NoChange, r);
  out.D.conservativeResize(r);
  out.Q.conservativeResize(Eigen::NoChange, r);
  return out;
}

Mat svt_prox(const Mat& m, double threshold) {
  if (threshold < 0.0)
    throw NegativeThreshold("svt_prox: threshold " + std::to_string(threshold) + " < 0");
  if (threshold == 0.0) {
    require_finite(m, "svt_prox");
    return m;
  }
  SvdTriple svd = raw_svd(m, "svt_prox");
  Vec shrunk = (svd.D.array() - threshold).max(0.0).matrix();
  Index r = 0;
  while (r < shrunk.size() && shrunk[r] > 0.0) ++r;
  if (r == 0) return Mat::Zero(m.rows(), m.cols());
  return svd.P.leftCols(r) * shrunk.head(r).asDiagonal() * svd.Q.leftCols(r).transpose();
}

double nuclear_norm(const Mat& m) {
  require_finite(m, "nuclear_norm");
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

double operator_norm(const Mat& m) {
  require_finite(m, "operator_norm");
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues().size() == 0 ? 0.0 : svd.singularValues()[0];
}

FactorPair factor_decompose(const Mat& theta, Index k) {
  const Index max_rank = std::min(theta.rows(), theta.cols());
  if (k < 1 || k > max_rank)
    throw KOutOfRange("factor_decompose: K " + std::to_string(k) + " outside [1, " +
                      std::to_string(max_rank) + "]");
  SvdTriple svd = raw_svd(theta, "factor_decompose");
  const double sqrt_t = std::sqrt(static_cast<double>(theta.cols()));
  FactorPair pair;
  pair.factors = sqrt_t * svd.Q.leftCols(k);
  pair.loadings = theta * pair.factors / static_cast<double>(theta.cols());
  pair.rank = k;
  return pair;
}

}  // namespace lrpq
