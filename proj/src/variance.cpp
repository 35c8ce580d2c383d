#include "lrpq/variance.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace lrpq {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684;

// Symmetric inverse through the eigendecomposition; the relative cutoff keeps
// near-singular matrices from silently exploding.
Mat sym_inverse(const Mat& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()));
  const Vec& lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  const double smallest = lambda.cwiseAbs().minCoeff();
  if (largest <= 0.0 || smallest <= 1e-12 * largest)
    throw SingularVhat(std::string(what) + " is numerically singular, condition number " +
                       (smallest > 0.0 ? std::to_string(largest / smallest) : "inf"));
  return eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

KernelValues kernel_eval(double u, const KernelSpec& spec) {
  spec.validate();
  const double z = u / spec.bandwidth;
  KernelValues out;
  out.density = kInvSqrt2Pi * std::exp(-0.5 * z * z) / spec.bandwidth;
  out.survival = 0.5 * std::erfc(z / std::sqrt(2.0));
  return out;
}

KernelSpec resolve_kernel(const Mat& eps, double bandwidth, Index lag_window, double h_scale) {
  require_finite(eps, "resolve_kernel residuals");
  if (eps.size() < 2) throw ShapeMismatch("resolve_kernel: need at least two residuals");
  if (h_scale <= 0.0) throw std::invalid_argument("resolve_kernel: h_scale must be positive");
  const Index dim = std::min(eps.rows(), eps.cols());

  KernelSpec spec;
  if (bandwidth > 0.0) {
    spec.bandwidth = bandwidth;
  } else {
    const double mean = eps.mean();
    double sd = std::sqrt((eps.array() - mean).square().sum() /
                          static_cast<double>(eps.size() - 1));
    if (!(sd > 0.0)) sd = 1.0;
    spec.bandwidth = h_scale * sd * std::pow(static_cast<double>(dim), -0.2);
  }
  if (lag_window > 0) {
    spec.lag_window = lag_window;
  } else {
    spec.lag_window = static_cast<Index>(std::ceil(std::pow(static_cast<double>(dim), 0.25)));
    spec.lag_window = std::max<Index>(1, std::min(spec.lag_window, eps.cols() - 1));
  }
  spec.validate();
  return spec;
}

Mat residuals(const Mat& y, const std::vector<Mat>& x, const CoefficientSet& theta) {
  if (theta.size() != x.size() + 1)
    throw ShapeMismatch("residuals: " + std::to_string(theta.size()) + " blocks for " +
                        std::to_string(x.size()) + " regressors");
  require_same_shape(y, theta[0], "residuals intercept");
  Mat out = y - theta[0];
  for (std::size_t j = 0; j < x.size(); ++j) {
    require_same_shape(y, x[j], "residuals regressor");
    require_same_shape(y, theta[j + 1], "residuals slope block");
    out -= x[j].cwiseProduct(theta[j + 1]);
  }
  return out;
}

VarianceSet variance_set(const EstimationResult& result, const Mat& eps,
                         const std::vector<PcaFit>& pca, const KernelSpec& spec, Index j) {
  spec.validate();
  const auto p = static_cast<Index>(result.theta_hat.size()) - 1;
  if (j < 1 || j > p)
    throw KOutOfRange("variance_set: slope index " + std::to_string(j) + " outside [1, " +
                      std::to_string(p) + "]");
  if (static_cast<Index>(pca.size()) < j)
    throw ShapeMismatch("variance_set: no PCA fit for slope " + std::to_string(j));
  const Mat& ehat = pca[static_cast<std::size_t>(j - 1)].residual;
  require_same_shape(eps, ehat, "variance_set residuals");
  require_finite(eps, "variance_set residuals");
  if (result.combos.size() != kCombos.size())
    throw ShapeMismatch("variance_set: expected all six combo estimates");

  const Index n = eps.rows();
  const Index t_len = eps.cols();
  if (spec.lag_window >= t_len)
    throw std::invalid_argument("variance_set: lag window " + std::to_string(spec.lag_window) +
                                " must stay below T = " + std::to_string(t_len));
  const Index k = result.combos.front().v_hat[static_cast<std::size_t>(j)].cols();
  if (k == 0) throw KOutOfRange("variance_set: slope block has rank 0");
  const double tau = result.tau;
  const double nt = static_cast<double>(n) * static_cast<double>(t_len);

  std::vector<const Mat*> vh;
  std::vector<const Mat*> uh;
  for (const ComboEstimate& c : result.combos) {
    vh.push_back(&c.v_hat[static_cast<std::size_t>(j)]);
    uh.push_back(&c.u_hat[static_cast<std::size_t>(j)]);
  }

  // Combo-averaged second-moment kernels: vr(t,s) = (1/6) sum_c v_t v_s',
  // ur(i) = (1/2) sum_c u_i u_i' (rows off the target group are zero).
  auto vr = [&](Index t, Index s) {
    Mat acc = Mat::Zero(k, k);
    for (const Mat* v : vh) acc += v->row(t).transpose() * v->row(s);
    return Mat(acc / 6.0);
  };
  std::vector<Mat> vr_tt(static_cast<std::size_t>(t_len));
  for (Index t = 0; t < t_len; ++t) vr_tt[static_cast<std::size_t>(t)] = vr(t, t);
  std::vector<Mat> ur_ii(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Mat acc = Mat::Zero(k, k);
    for (const Mat* u : uh) acc += u->row(i).transpose() * u->row(i);
    ur_ii[static_cast<std::size_t>(i)] = 0.5 * acc;
  }

  Mat kh(n, t_len);
  Mat survival_gap(n, t_len);  // tau - K_h(eps)
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < t_len; ++t) {
      const KernelValues kv = kernel_eval(eps(i, t), spec);
      kh(i, t) = kv.density;
      survival_gap(i, t) = tau - kv.survival;
    }

  VarianceSet out;
  out.kernel = spec;
  out.eps = eps;

  const Mat e2 = ehat.cwiseAbs2();
  out.vhat_u = Mat::Zero(k, k);
  out.vhat_v = Mat::Zero(k, k);
  out.omega_v = Mat::Zero(k, k);
  Mat omega_u_lead = Mat::Zero(k, k);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < t_len; ++t) {
      const double w = kh(i, t) * e2(i, t);
      out.vhat_u += w * vr_tt[static_cast<std::size_t>(t)];
      out.vhat_v += w * ur_ii[static_cast<std::size_t>(i)];
      out.omega_v += e2(i, t) * ur_ii[static_cast<std::size_t>(i)];
      omega_u_lead += e2(i, t) * vr_tt[static_cast<std::size_t>(t)];
    }
  out.vhat_u /= nt;
  out.vhat_v /= nt;
  out.omega_v *= tau * (1.0 - tau) / nt;
  omega_u_lead *= tau * (1.0 - tau);

  // Lag sums of S_its = e_it e_is vr(t,s) (tau - K_h(eps_it)) (tau - K_h(eps_is))
  // over the forward and backward windows of width T_1.
  const Mat eg = ehat.cwiseProduct(survival_gap);
  Mat omega_u_lags = Mat::Zero(k, k);
  const Index t1 = spec.lag_window;
  for (Index t = 0; t + t1 < t_len; ++t)
    for (Index s = t + 1; s <= t + t1; ++s)
      omega_u_lags += eg.col(t).dot(eg.col(s)) * vr(t, s);
  for (Index t = t1; t < t_len; ++t)
    for (Index s = t - t1; s < t; ++s)
      omega_u_lags += eg.col(t).dot(eg.col(s)) * vr(t, s);
  out.omega_u = (omega_u_lead + omega_u_lags) / nt;

  // HAC lag terms can push omega_u below PSD in finite samples; the sandwich
  // uses the clipped spectrum while omega_u keeps the raw sums.
  Eigen::SelfAdjointEigenSolver<Mat> omega_eig(0.5 * (out.omega_u + out.omega_u.transpose()));
  out.omega_u_min_eig = omega_eig.eigenvalues().minCoeff();
  Mat omega_u_psd;
  if (out.omega_u_min_eig < 0.0) {
    out.omega_u_clipped = true;
    omega_u_psd = omega_eig.eigenvectors() *
                  omega_eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                  omega_eig.eigenvectors().transpose();
  } else {
    omega_u_psd = 0.5 * (out.omega_u + out.omega_u.transpose());
  }

  const Mat vhat_u_inv = sym_inverse(out.vhat_u, "variance_set: vhat_u");
  const Mat vhat_v_inv = sym_inverse(out.vhat_v, "variance_set: vhat_v");
  out.sigma_u = vhat_u_inv * omega_u_psd * vhat_u_inv;
  out.sigma_v = vhat_v_inv * out.omega_v * vhat_v_inv;

  // Xi_it = (1/2) sum_c [ v_t' sigma_u v_t / T + 1{i in I_a} u_i' sigma_v u_i / N_a ].
  Vec unit_part = Vec::Zero(n);
  Vec time_part = Vec::Zero(t_len);
  for (std::size_t c = 0; c < kCombos.size(); ++c) {
    const double group_size =
        static_cast<double>(result.split.group_size(result.combos[c].id.target));
    unit_part += ((*uh[c] * out.sigma_v).cwiseProduct(*uh[c])).rowwise().sum() / group_size;
    time_part += ((*vh[c] * out.sigma_u).cwiseProduct(*vh[c])).rowwise().sum() /
                 static_cast<double>(t_len);
  }
  out.xi = 0.5 * (unit_part.replicate(1, t_len) + time_part.transpose().replicate(n, 1));
  return out;
}

}  // namespace lrpq
