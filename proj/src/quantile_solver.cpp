#include "lrpq/quantile_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace lrpq {
namespace {

double objective_at(const Mat& design, const Vec& y, double tau, const Vec& beta) {
  return mean_check_loss(y - design * beta, tau);
}

// Largest step in [0, cap] keeping v + step*dv strictly positive.
double step_bound(const Vec& v, const Vec& dv, double cap) {
  double f = cap;
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) f = std::min(f, -v[i] / dv[i]);
  return f;
}

// Frisch-Newton interior point on the dual LP of quantile regression:
//   min c'x  s.t.  A x = b,  0 <= x <= 1,  with c = -y, A = design',
//   b = (1-tau) * A * ones.  The equality multiplier converges to -beta.
bool frisch_newton(const Mat& design, const Vec& y, double tau, Vec& beta_out, int& iters) {
  const Index n = design.rows();
  const Mat A = design.transpose();
  const Vec c = -y;
  const Vec b = (1.0 - tau) * (A * Vec::Ones(n));

  Vec x = Vec::Constant(n, 1.0 - tau);
  Vec s = Vec::Constant(n, tau);

  Mat AAt = A * A.transpose();
  Eigen::LDLT<Mat> init(AAt);
  if (init.info() != Eigen::Success) return false;
  Vec yd = init.solve(A * c);

  Vec r = c - A.transpose() * yd;
  const double shift = 1e-3 * (1.0 + r.cwiseAbs().maxCoeff());
  Vec z = r.cwiseMax(0.0).array() + shift;
  Vec w = z - r;

  double gap = c.dot(x) - b.dot(yd) + w.sum();
  const double tol = 1e-11 * (1.0 + std::abs(c.dot(x)));
  const double beta_step = 0.9995;
  const int max_it = 100;

  int it = 0;
  while (gap > tol && it < max_it) {
    ++it;
    Vec q = (z.array() / x.array() + w.array() / s.array()).inverse().matrix();
    if (!q.allFinite()) return false;
    r = z - w;

    Mat AQ = A * q.asDiagonal();
    Mat M = AQ * A.transpose();
    Eigen::LDLT<Mat> fact(M);
    if (fact.info() != Eigen::Success) return false;

    // Affine predictor.
    Vec dy = fact.solve(AQ * r);
    Vec dx = q.asDiagonal() * (A.transpose() * dy - r);
    Vec ds = -dx;
    Vec dz = (-z.array() * (1.0 + dx.array() / x.array())).matrix();
    Vec dw = (-w.array() * (1.0 + ds.array() / s.array())).matrix();

    double fp = std::min(step_bound(x, dx, 1.0 / beta_step), step_bound(s, ds, 1.0 / beta_step));
    double fd = std::min(step_bound(z, dz, 1.0 / beta_step), step_bound(w, dw, 1.0 / beta_step));
    fp = std::min(beta_step * fp, 1.0);
    fd = std::min(beta_step * fd, 1.0);

    if (std::min(fp, fd) < 1.0) {
      // Mehrotra corrector.
      double mu = z.dot(x) + w.dot(s);
      double g = (z + fd * dz).dot(x + fp * dx) + (w + fd * dw).dot(s + fp * ds);
      double mu_t = mu * std::pow(g / mu, 3) / (2.0 * static_cast<double>(n));

      Vec xinv = x.cwiseInverse();
      Vec sinv = s.cwiseInverse();
      Vec dxdz = dx.cwiseProduct(dz);
      Vec dsdw = ds.cwiseProduct(dw);
      Vec xi = mu_t * (xinv - sinv);
      Vec corr = xinv.cwiseProduct(dxdz) - sinv.cwiseProduct(dsdw);

      dy = fact.solve(AQ * (r + corr - xi));
      dx = q.asDiagonal() * (A.transpose() * dy + xi - r - corr);
      ds = -dx;
      dz = ((mu_t * xinv - xinv.cwiseProduct(dxdz)).array() - z.array() -
            (z.array() / x.array()) * dx.array())
               .matrix();
      dw = ((mu_t * sinv - sinv.cwiseProduct(dsdw)).array() - w.array() -
            (w.array() / s.array()) * ds.array())
               .matrix();

      fp = std::min(step_bound(x, dx, 1.0 / beta_step), step_bound(s, ds, 1.0 / beta_step));
      fd = std::min(step_bound(z, dz, 1.0 / beta_step), step_bound(w, dw, 1.0 / beta_step));
      fp = std::min(beta_step * fp, 1.0);
      fd = std::min(beta_step * fd, 1.0);
    }

    x += fp * dx;
    s += fp * ds;
    yd += fd * dy;
    z += fd * dz;
    w += fd * dw;
    gap = c.dot(x) - b.dot(yd) + w.sum();
    if (!std::isfinite(gap)) return false;
  }

  iters = it;
  beta_out = -yd;
  return beta_out.allFinite() && gap <= 1e-6 * (1.0 + std::abs(c.dot(x)));
}

// Newton descent on a smoothed objective, tightening the smoothing parameter:
// rho_tau(r) ~ (tau - 1/2) r + sqrt(r^2 + eps^2) / 2.
Vec smoothed_newton(const Mat& design, const Vec& y, double tau) {
  const Index K = design.cols();
  Vec beta = Vec::Zero(K);
  double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  for (double eps = scale; eps >= 1e-9 * scale; eps *= 0.1) {
    for (int step = 0; step < 30; ++step) {
      Vec r = y - design * beta;
      Vec root = (r.array().square() + eps * eps).sqrt().matrix();
      Vec grad_w = Vec::Constant(r.size(), tau - 0.5) + (0.5 * r.array() / root.array()).matrix();
      Vec g = -design.transpose() * grad_w;
      Vec hess_w = (0.5 * eps * eps * root.array().cube().inverse()).matrix();
      Mat H = design.transpose() * hess_w.asDiagonal() * design;
      H.diagonal().array() += 1e-12 * scale;
      Eigen::LDLT<Mat> fact(H);
      if (fact.info() != Eigen::Success) return beta;
      Vec delta = fact.solve(-g);
      if (!delta.allFinite()) return beta;
      double f0 = objective_at(design, y, tau, beta);
      double t = 1.0;
      Vec trial = beta + delta;
      // Backtrack on the exact objective so each step never degrades it.
      for (int back = 0; back < 40 && objective_at(design, y, tau, trial) > f0; ++back) {
        t *= 0.5;
        trial = beta + t * delta;
      }
      if ((trial - beta).norm() <= 1e-14 * (1.0 + beta.norm())) {
        beta = trial;
        break;
      }
      beta = trial;
    }
  }
  return beta;
}

// Tries interpolating K-subsets drawn from the observations with the smallest
// |residual| at the current beta; an LP vertex interpolates K points, so this
// snaps a near-optimal iterate onto the exact minimizer.
void vertex_polish(const Mat& design, const Vec& y, double tau, Vec& beta, double& objective) {
  const Index n = design.rows();
  const Index K = design.cols();
  const Index pool = std::min<Index>(n, K + 4);

  Vec resid = y - design * beta;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(resid[a]) < std::abs(resid[b]);
  });
  order.resize(static_cast<std::size_t>(pool));

  std::vector<Index> subset(static_cast<std::size_t>(K));
  std::vector<Index> stack;
  stack.push_back(0);
  while (!stack.empty()) {
    Index depth = static_cast<Index>(stack.size()) - 1;
    Index& pos = stack.back();
    if (pos >= pool) {
      stack.pop_back();
      if (!stack.empty()) ++stack.back();
      continue;
    }
    subset[static_cast<std::size_t>(depth)] = order[static_cast<std::size_t>(pos)];
    if (depth + 1 == K) {
      Mat Xh(K, K);
      Vec yh(K);
      for (Index k = 0; k < K; ++k) {
        Xh.row(k) = design.row(subset[static_cast<std::size_t>(k)]);
        yh[k] = y[subset[static_cast<std::size_t>(k)]];
      }
      Eigen::FullPivLU<Mat> lu(Xh);
      if (lu.isInvertible()) {
        Vec cand = lu.solve(yh);
        if (cand.allFinite()) {
          double obj = objective_at(design, y, tau, cand);
          if (obj < objective) {
            objective = obj;
            beta = cand;
          }
        }
      }
      ++pos;
    } else {
      stack.push_back(pos + 1);
    }
  }
}

}  // namespace

QrResult solve_qr(const QrProblem& problem) {
  const Mat& X = problem.design;
  const Vec& y = problem.response;
  const double tau = problem.tau.value();
  const Index n = X.rows();
  const Index K = X.cols();

  Eigen::ColPivHouseholderQR<Mat> rank_check(X);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < K)
    throw RankDeficientDesign("solve_qr: design has rank " + std::to_string(rank_check.rank()) +
                              " < " + std::to_string(K));

  QrResult result;

  // Constant single column: the objective depends on beta only through the
  // scaled response, whose minimizer set is pinned to the order statistic
  // y_(ceil(n*tau)) for reproducibility.
  if (K == 1 && (X.col(0).array() == X(0, 0)).all() && X(0, 0) != 0.0) {
    Vec scaled = y / X(0, 0);
    std::vector<double> values(scaled.data(), scaled.data() + n);
    auto idx = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * tau - 1e-9) - 1.0);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx),
                     values.end());
    result.beta = Vec::Constant(1, values[idx]);
    result.objective = objective_at(X, y, tau, result.beta);
    return result;
  }

  Vec beta;
  int iters = 0;
  bool ok = false;
  try {
    ok = frisch_newton(X, y, tau, beta, iters);
  } catch (...) {
    ok = false;
  }
  if (!ok) {
    beta = smoothed_newton(X, y, tau);
    result.smoothing_fallback = true;
  }
  result.iterations = iters;
  result.beta = beta;
  result.objective = objective_at(X, y, tau, beta);
  vertex_polish(X, y, tau, result.beta, result.objective);
  return result;
}

}  // namespace lrpq
