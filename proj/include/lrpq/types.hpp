#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace lrpq {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatX<double>;
using Vec = VecX<double>;
using Index = Eigen::Index;

/// N x T panel: units in rows, periods in columns. Plays the role of the
/// outcome Y, a regressor X_j, a coefficient block, or a residual matrix.
using PanelMatrix = Mat;

/// The tuple {Theta_0, Theta_1, ..., Theta_p}: intercept plus p slope blocks.
using CoefficientSet = std::vector<Mat>;

/// Loadings U (N x K) and factors V (T x K) with Theta = U * V^T and the
/// scaling V^T V / T = I.
struct FactorPair {
  Mat loadings;
  Mat factors;
  Index rank = 0;
};

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonFiniteInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct RankDeficientDesign : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NegativeThreshold : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct KOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ROutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct TauOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct TooFewUnits : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularVhat : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonPositiveSigmaStar : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteInput(std::string(what) + ": non-finite entries");
}

inline void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
}

/// Quantile level in the open interval (0,1).
class QuantileIndex {
 public:
  explicit QuantileIndex(double tau) : tau_(tau) {
    if (!(tau > 0.0 && tau < 1.0))
      throw TauOutOfRange("tau must lie strictly inside (0,1), got " + std::to_string(tau));
  }
  double value() const { return tau_; }
  operator double() const { return tau_; }

 private:
  double tau_;
};

}  // namespace lrpq
