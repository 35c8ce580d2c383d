#include "lrpq/nnr_admm.hpp"

#include "lrpq/lowrank.hpp"
#include "lrpq/pinball.hpp"

#include <algorithm>
#include <cmath>

namespace lrpq {

AdmmState AdmmState::zeros(Index n, Index t, std::size_t p) {
  AdmmState s;
  s.V = Mat::Zero(n, t);
  s.W = Mat::Zero(n, t);
  s.Z0 = Mat::Zero(n, t);
  s.Theta0 = Mat::Zero(n, t);
  s.U_v = Mat::Zero(n, t);
  s.U_w = Mat::Zero(n, t);
  s.U_z0 = Mat::Zero(n, t);
  s.Z.assign(p, Mat::Zero(n, t));
  s.Theta.assign(p, Mat::Zero(n, t));
  s.U_z.assign(p, Mat::Zero(n, t));
  return s;
}

double default_nu(Index n, Index t, double c) {
  if (n < 2 || t < 2) throw std::invalid_argument("default_nu: need N, T >= 2");
  if (c <= 0.0) throw std::invalid_argument("default_nu: c must be positive");
  const double dn = static_cast<double>(n);
  const double dt = static_cast<double>(t);
  return c * std::max(std::sqrt(dn), std::sqrt(dt * std::log(dt))) / (dn * dt);
}

Mat prox_check_matrix(const Mat& a, double tau, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("prox_check_matrix: rho must be positive");
  const double hi = tau / rho;
  const double lo = -(1.0 - tau) / rho;
  return a.unaryExpr([hi, lo](double v) {
    if (v > hi) return v - hi;
    if (v < lo) return v - lo;
    return 0.0;
  });
}

std::vector<Mat> update_slopes(const Mat& a, const std::vector<Mat>& x,
                               const std::vector<Mat>& c) {
  const std::size_t p = x.size();
  if (c.size() != p) throw ShapeMismatch("update_slopes: regressor/target count mismatch");
  for (std::size_t j = 0; j < p; ++j) {
    require_same_shape(a, x[j], "update_slopes");
    require_same_shape(a, c[j], "update_slopes");
  }
  std::vector<Mat> theta(p, Mat(a.rows(), a.cols()));
  if (p == 0) return theta;
  Vec xv(p), cv(p);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index t = 0; t < a.cols(); ++t) {
      for (std::size_t j = 0; j < p; ++j) {
        xv[static_cast<Index>(j)] = x[j](i, t);
        cv[static_cast<Index>(j)] = c[j](i, t);
      }
      // theta = (I + x x')^{-1} (c - A x) = m - x (x'm) / (1 + x'x)
      Vec m = cv - a(i, t) * xv;
      Vec th = m - xv * (xv.dot(m) / (1.0 + xv.squaredNorm()));
      for (std::size_t j = 0; j < p; ++j) theta[j](i, t) = th[static_cast<Index>(j)];
    }
  }
  return theta;
}

void update_nuclear_blocks(AdmmState& state, const std::vector<double>& nu, double rho) {
  const double nt = static_cast<double>(state.W.rows() * state.W.cols());
  state.Theta0 = svt_prox(state.Z0 + state.U_z0, nu.at(0) * nt / rho);
  for (std::size_t j = 0; j < state.Z.size(); ++j)
    state.Z[j] = svt_prox(state.Theta[j] - state.U_z[j], nu.at(j + 1) * nt / rho);
}

void update_w_z0(AdmmState& state, const Mat& y, const std::vector<Mat>& x) {
  Mat a_tilde = -y + state.U_w;
  for (std::size_t j = 0; j < x.size(); ++j) a_tilde += x[j].cwiseProduct(state.Theta[j]);
  Mat b_tilde = -state.V - state.U_v;
  Mat c_tilde = -state.Theta0 + state.U_z0;
  state.Z0 = (-a_tilde - 2.0 * c_tilde + b_tilde) / 3.0;
  state.W = -a_tilde - c_tilde - 2.0 * state.Z0;
}

namespace {

double fit_objective(const Mat& y, const std::vector<Mat>& x, double tau,
                     const CoefficientSet& theta, const std::vector<double>& nu) {
  Mat resid = y - theta[0];
  for (std::size_t j = 0; j < x.size(); ++j) resid -= x[j].cwiseProduct(theta[j + 1]);
  double obj = mean_check_loss(resid, tau);
  for (std::size_t j = 0; j < theta.size(); ++j) obj += nu[j] * nuclear_norm(theta[j]);
  return obj;
}

}  // namespace

NnrFit fit_nnr(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
               const NnrConfig& config) {
  config.validate();
  require_finite(y, "fit_nnr Y");
  for (const Mat& xj : x) {
    require_same_shape(y, xj, "fit_nnr X");
    require_finite(xj, "fit_nnr X");
  }
  const Index n = y.rows();
  const Index t = y.cols();
  const std::size_t p = x.size();
  if (n < 2 || t < 2) throw ShapeMismatch("fit_nnr: need N, T >= 2");

  const double sqrt_nt = std::sqrt(static_cast<double>(n * t));

  std::vector<double> nu = config.nu;
  if (nu.empty()) {
    // Slope penalties carry the mean absolute size of their regressor so the
    // fit is invariant to regressor units: scaling X_j by s and Theta_j by
    // 1/s changes neither the loss term nor the penalty.
    const double rate = default_nu(n, t, config.nu_scale);
    nu.assign(p + 1, rate);
    for (std::size_t j = 0; j < p; ++j) {
      const double scale = x[j].cwiseAbs().mean();
      if (scale > 0.0) nu[j + 1] = rate * scale;
    }
  }
  if (nu.size() != p + 1)
    throw std::invalid_argument("fit_nnr: nu must have p+1 entries, got " +
                                std::to_string(nu.size()));
  double rho = config.admm_penalty;
  int adaptations = 0;
  AdmmState s = AdmmState::zeros(n, t, p);

  NnrDiagnostics diag;
  diag.nu = nu;
  diag.primal_history.reserve(static_cast<std::size_t>(config.max_iter));
  diag.dual_history.reserve(static_cast<std::size_t>(config.max_iter));

  std::vector<Mat> c_slopes(p);
  const double tv = tau.value();

  for (int it = 1; it <= config.max_iter; ++it) {
    s.iter = it;
    Mat w_prev = s.W;
    Mat z0_prev = s.Z0;
    std::vector<Mat> z_prev = s.Z;

    // Order: V; slope blocks; nuclear blocks; joint (Z0, W); duals.
    s.V = prox_check_matrix(s.W - s.U_v, tv, rho);
    if (p > 0) {
      Mat a_slope = s.W + s.Z0 + s.U_w - y;
      for (std::size_t j = 0; j < p; ++j) c_slopes[j] = s.Z[j] + s.U_z[j];
      s.Theta = update_slopes(a_slope, x, c_slopes);
    }
    update_nuclear_blocks(s, nu, rho);
    update_w_z0(s, y, x);

    Mat fit_gap = s.W - y + s.Z0;
    for (std::size_t j = 0; j < p; ++j) fit_gap += x[j].cwiseProduct(s.Theta[j]);
    s.U_v += s.V - s.W;
    s.U_w += fit_gap;
    s.U_z0 += s.Z0 - s.Theta0;
    for (std::size_t j = 0; j < p; ++j) s.U_z[j] += s.Z[j] - s.Theta[j];

    double primal = (s.V - s.W).norm() + fit_gap.norm() + (s.Z0 - s.Theta0).norm();
    for (std::size_t j = 0; j < p; ++j) primal += (s.Z[j] - s.Theta[j]).norm();
    double dual_sq = (s.W - w_prev).squaredNorm() + (s.Z0 - z0_prev).squaredNorm();
    for (std::size_t j = 0; j < p; ++j) dual_sq += (s.Z[j] - z_prev[j]).squaredNorm();
    double dual = rho * std::sqrt(dual_sq);

    s.primal_residual = primal / sqrt_nt;
    s.dual_residual = dual / sqrt_nt;
    diag.primal_history.push_back(s.primal_residual);
    diag.dual_history.push_back(s.dual_residual);
    diag.iterations = it;

    if (s.primal_residual <= config.tol_primal && s.dual_residual <= config.tol_dual) {
      diag.converged = true;
      break;
    }

    // Rebalance on a stride and stop after a fixed number of changes: the
    // dual residual scales with rho, so per-iteration rebalancing can chase
    // its own effect and cycle; a frozen tail is a plain fixed-rho iteration.
    if (config.adapt_rho && it % 25 == 0 && adaptations < 40) {
      double scale = 1.0;
      if (s.primal_residual > 10.0 * s.dual_residual)
        scale = 2.0;
      else if (s.dual_residual > 10.0 * s.primal_residual)
        scale = 0.5;
      double next = std::clamp(rho * scale, 1e-4, 1e4);
      if (next != rho) {
        double ratio = rho / next;
        s.U_v *= ratio;
        s.U_w *= ratio;
        s.U_z0 *= ratio;
        for (Mat& u : s.U_z) u *= ratio;
        rho = next;
        ++adaptations;
      }
    }
  }

  NnrFit fit;
  fit.theta.reserve(p + 1);
  fit.theta.push_back(s.Theta0);
  for (std::size_t j = 0; j < p; ++j) fit.theta.push_back(s.Z[j]);
  diag.rho_final = rho;
  diag.objective = fit_objective(y, x, tv, fit.theta, nu);
  fit.diagnostics = std::move(diag);
  return fit;
}

}  // namespace lrpq
