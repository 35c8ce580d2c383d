#pragma once

#include "lrpq/pca.hpp"
#include "lrpq/three_stage.hpp"
#include "lrpq/types.hpp"

namespace lrpq {

enum class KernelFamily { normal };

/// Smoothing kernel and lag window for the score variance estimators.
struct KernelSpec {
  KernelFamily family = KernelFamily::normal;
  double bandwidth = 0.0;  // h
  Index lag_window = 1;    // T_1
  int order = 2;           // m, moment order of the kernel

  void validate() const {
    if (!(bandwidth > 0.0))
      throw std::invalid_argument("KernelSpec: bandwidth must be positive");
    if (lag_window < 1) throw std::invalid_argument("KernelSpec: lag window must be >= 1");
    if (order < 1) throw std::invalid_argument("KernelSpec: kernel order must be >= 1");
  }
};

struct KernelValues {
  double density = 0.0;   // k_h(u) = k(u / h) / h
  double survival = 0.0;  // K_h(u) = integral of k from u / h upward
};

KernelValues kernel_eval(double u, const KernelSpec& spec);

/// Plug-in defaults: h = h_scale * sd(eps) * (N ^ T)^(-1/5) and
/// T_1 = ceil((N ^ T)^(1/4)), each kept only when the override is zero.
KernelSpec resolve_kernel(const Mat& eps, double bandwidth = 0.0, Index lag_window = 0,
                          double h_scale = 1.06);

/// eps = Y - Theta_0 - sum_j X_j o Theta_j.
Mat residuals(const Mat& y, const std::vector<Mat>& x, const CoefficientSet& theta);

struct VarianceSet {
  Mat vhat_u, vhat_v;    // K x K score Jacobians
  Mat omega_u, omega_v;  // K x K long-run score variances; omega_u as displayed
  Mat sigma_u, sigma_v;  // sandwich variances
  Mat xi;                // N x T cellwise variance of the combined estimate
  Mat eps;               // residuals the kernels were evaluated at
  KernelSpec kernel;
  bool omega_u_clipped = false;  // negative eigenvalues were clipped before the sandwich
  double omega_u_min_eig = 0.0;
};

/// All variance estimates for slope block j >= 1, built from the six combo
/// estimates, the regressor's PCA residual, and kernel-smoothed residual
/// indicators.
VarianceSet variance_set(const EstimationResult& result, const Mat& eps,
                         const std::vector<PcaFit>& pca, const KernelSpec& spec, Index j);

}  // namespace lrpq
