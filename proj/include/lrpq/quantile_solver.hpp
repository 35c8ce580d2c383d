#pragma once

#include "lrpq/pinball.hpp"
#include "lrpq/types.hpp"

namespace lrpq {

/// A low-dimensional quantile regression: n observations, K regressors.
struct QrProblem {
  Mat design;
  Vec response;
  QuantileIndex tau;

  QrProblem(Mat design_, Vec response_, QuantileIndex tau_)
      : design(std::move(design_)), response(std::move(response_)), tau(tau_) {
    if (design.rows() != response.size())
      throw ShapeMismatch("QrProblem: design rows " + std::to_string(design.rows()) +
                          " vs response length " + std::to_string(response.size()));
    if (design.cols() < 1) throw ShapeMismatch("QrProblem: need at least one regressor");
    if (design.rows() < design.cols())
      throw RankDeficientDesign("QrProblem: fewer observations (" +
                                std::to_string(design.rows()) + ") than regressors (" +
                                std::to_string(design.cols()) + ")");
    require_finite(design, "QrProblem design");
    require_finite(response, "QrProblem response");
  }
};

struct QrResult {
  Vec beta;
  double objective = 0.0;  // mean check loss at beta
  int iterations = 0;
  bool smoothing_fallback = false;
};

/// Minimizes (1/n) sum_t check_loss(y_t - z_t' beta, tau). Interior point on
/// the dual LP, then a vertex polish over interpolating subsets; falls back
/// to a smoothed Newton path when the interior point iteration degrades.
QrResult solve_qr(const QrProblem& problem);

}  // namespace lrpq
