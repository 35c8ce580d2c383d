#pragma once

#include "lrpq/types.hpp"

namespace lrpq {

/// PCA fit of a regressor panel under the normalizations L'L / N = I and
/// W'W / T diagonal descending; common = L W', residual = X - common.
struct PcaFit {
  Mat loadings;  // N x r
  Mat factors;   // T x r
  Mat common;    // N x T
  Mat residual;  // N x T
  Index r = 0;
};

PcaFit pca_fit(const Mat& x, Index r);

struct FactorCount {
  int r = 1;
  double max_ratio = 0.0;
  bool low_confidence = false;
};

/// Eigenvalue-ratio rule: argmax over k <= r_max of sigma_k / sigma_{k+1}.
int estimate_num_factors(const Mat& x, Index r_max);
FactorCount estimate_num_factors_detail(const Mat& x, Index r_max);

}  // namespace lrpq
