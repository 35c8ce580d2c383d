#pragma once

#include "lrpq/types.hpp"

namespace lrpq {

/// Check (pinball) loss rho_tau(u) = u * (tau - 1{u <= 0}).
inline double check_loss(double u, double tau) {
  return u * (tau - (u <= 0.0 ? 1.0 : 0.0));
}

inline double check_loss(double u, const QuantileIndex& tau) {
  return check_loss(u, tau.value());
}

/// Elementwise check loss of an Eigen expression, returned as an expression.
template <class Derived>
auto check_loss_array(const Eigen::MatrixBase<Derived>& u, double tau) {
  return u.array() * (tau - (u.array() <= 0).template cast<typename Derived::Scalar>());
}

/// Mean check loss over all entries of a residual matrix or vector.
template <class Derived>
double mean_check_loss(const Eigen::MatrixBase<Derived>& residuals, double tau) {
  return check_loss_array(residuals, tau).sum() /
         static_cast<double>(residuals.size());
}

}  // namespace lrpq
