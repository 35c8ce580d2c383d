#pragma once

#include "lrpq/types.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace lrpq {

struct NnrConfig {
  /// Nuclear-norm penalties per block j = 0..p; empty means nu_scale times
  /// the rate default, with each slope block further weighted by the root
  /// mean square of its regressor so the fit is invariant to regressor units.
  std::vector<double> nu;
  double nu_scale = 1.0;
  double admm_penalty = 1.0;  // rho
  int max_iter = 2000;
  double tol_primal = 1e-6;  // relative to sqrt(NT)
  double tol_dual = 1e-6;
  bool adapt_rho = true;

  void validate() const {
    if (admm_penalty <= 0.0) throw std::invalid_argument("NnrConfig: rho must be positive");
    if (tol_primal <= 0.0 || tol_dual <= 0.0)
      throw std::invalid_argument("NnrConfig: tolerances must be positive");
    if (max_iter < 1) throw std::invalid_argument("NnrConfig: max_iter must be >= 1");
    if (nu_scale <= 0.0) throw std::invalid_argument("NnrConfig: nu_scale must be positive");
    for (double v : nu)
      if (v < 0.0) throw std::invalid_argument("NnrConfig: nu entries must be >= 0");
  }
};

struct AdmmState {
  Mat V, W, Z0;        // check-loss block, fit block, intercept consensus
  std::vector<Mat> Z;  // slope consensus blocks, j = 1..p
  Mat Theta0;
  std::vector<Mat> Theta;  // slope blocks, j = 1..p
  Mat U_v, U_w, U_z0;      // scaled duals
  std::vector<Mat> U_z;
  int iter = 0;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();

  static AdmmState zeros(Index n, Index t, std::size_t p);
};

struct NnrDiagnostics {
  bool converged = false;
  int iterations = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> primal_history;
  std::vector<double> dual_history;
  std::vector<double> nu;
  double rho_final = 0.0;
};

struct NnrFit {
  CoefficientSet theta;  // p+1 blocks; [0] is the intercept
  NnrDiagnostics diagnostics;
};

/// Penalty rate rule: c * (sqrt(N) v sqrt(T log T)) / (N T), natural log.
double default_nu(Index n, Index t, double c);

/// Elementwise prox of the check loss: the minimizer of
/// check_loss(v, tau) + (rho/2) (v - a)^2 per cell.
Mat prox_check_matrix(const Mat& a, double tau, double rho);

/// Per-cell minimizer of (A_it + sum_j x_j theta_j)^2 + sum_j (c_j - theta_j)^2
/// with c = Z + U; solved through the rank-one inverse identity.
std::vector<Mat> update_slopes(const Mat& a, const std::vector<Mat>& x,
                               const std::vector<Mat>& c);

/// Theta0 <- svt_prox(Z0 + U_z0, nu_0 N T / rho); Z_j <- svt_prox(Theta_j - U_zj, ...).
void update_nuclear_blocks(AdmmState& state, const std::vector<double>& nu, double rho);

/// Joint minimizer over (Z0, W) of the three coupled quadratic terms, with
/// A~ = -Y + sum X o Theta + U_w, B~ = -V - U_v, C~ = -Theta0 + U_z0.
void update_w_z0(AdmmState& state, const Mat& y, const std::vector<Mat>& x);

NnrFit fit_nnr(const Mat& y, const std::vector<Mat>& x, const QuantileIndex& tau,
               const NnrConfig& config);

}  // namespace lrpq
