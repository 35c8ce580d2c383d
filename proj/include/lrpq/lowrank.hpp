#pragma once

#include "lrpq/types.hpp"

namespace lrpq {

struct SvdTriple {
  Mat P;  // N x r left singular vectors
  Vec D;  // r singular values, descending
  Mat Q;  // T x r right singular vectors
};

/// Thin SVD with a deterministic sign convention (the largest-magnitude entry
/// of each right singular vector is nonnegative) and singular values below
/// 1e-12 * D[0] dropped.
SvdTriple thin_svd(const Mat& m);

/// Soft-thresholds the singular values: P diag(max(D - threshold, 0)) Q^T,
/// the minimizer of (1/2)||M - Theta||_F^2 + threshold * ||Theta||_*.
Mat svt_prox(const Mat& m, double threshold);

double nuclear_norm(const Mat& m);
double operator_norm(const Mat& m);

/// Factors with the sqrt(T) scaling: V = sqrt(T) * (first K right singular
/// vectors), U = Theta * V / T, so U V^T is the best rank-K approximation.
FactorPair factor_decompose(const Mat& theta, Index k);

}  // namespace lrpq
