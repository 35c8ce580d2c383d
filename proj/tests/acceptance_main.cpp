// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lrpq/lowrank.hpp"
#include "lrpq/montecarlo.hpp"
#include "lrpq/nnr_admm.hpp"
#include "lrpq/pca.hpp"
#include "lrpq/pinball.hpp"
#include "lrpq/quantile_solver.hpp"
#include "lrpq/rng.hpp"
#include "lrpq/spec_tests.hpp"
#include "lrpq/three_stage.hpp"
#include "lrpq/types.hpp"
#include "lrpq/variance.hpp"

#include "oracles.hpp"

namespace {

using lrpq::Index;
using lrpq::Mat;
using lrpq::Rng;
using lrpq::Vec;

int g_failed = 0;

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

using Outcome = std::pair<bool, std::string>;

void run(int id, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    Outcome out = body();
    ok = out.first;
    detail = out.second;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!ok) ++g_failed;
  std::printf("[%s] criterion %d: %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, detail.c_str(),
              secs);
  std::fflush(stdout);
}

// Synthetic estimation result with a contiguous 3-group split and one slope
// block; u is 1 on each combo's target rows and v is 1 everywhere, with
// optional noise on the slope block so variances stay positive.
lrpq::EstimationResult synthetic_result(Index n, Index t, Rng* noise) {
  lrpq::EstimationResult result;
  result.tau = 0.5;
  result.theta_hat = {Mat::Zero(n, t), Mat::Zero(n, t)};
  const Index per = n / 3;
  result.split.membership.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    const int a = std::min(static_cast<int>(i / per) + 1, 3);
    result.split.groups[static_cast<std::size_t>(a - 1)].push_back(i);
    result.split.membership[static_cast<std::size_t>(i)] = a;
  }
  for (const lrpq::ComboId& id : lrpq::kCombos) {
    lrpq::ComboEstimate combo;
    combo.id = id;
    Mat u = Mat::Zero(n, 1);
    for (Index i : result.split.group(id.target)) u.row(i).setOnes();
    combo.u_hat = {u, u};
    combo.v_hat = {Mat::Ones(t, 1), Mat::Ones(t, 1)};
    if (noise != nullptr) {
      for (Index i : result.split.group(id.target))
        combo.u_hat[1].row(i) = oracle::random_normal(*noise, 1, 1);
      combo.v_hat[1] = oracle::random_normal(*noise, t, 1);
    }
    result.combos.push_back(combo);
  }
  if (noise != nullptr) result.theta_hat[1] = oracle::random_normal(*noise, n, t);
  return result;
}

double effective_frequency(const lrpq::TableCell& cell, std::size_t column, int reps) {
  const double survivors = static_cast<double>(reps - cell.failures);
  return cell.metrics[column] * survivors / static_cast<double>(reps);
}

double median_of(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  const std::size_t m = draws.size();
  return m % 2 == 1 ? draws[m / 2] : 0.5 * (draws[m / 2 - 1] + draws[m / 2]);
}

Outcome criterion1() {
  const std::vector<double> alphas{0.01, 0.05, 0.10};
  const Mat id1 = Mat::Identity(1, 1);
  const auto res_u = lrpq::test_homogeneity_u(synthetic_result(195, 5, nullptr), id1, 1, alphas);
  const auto res_v = lrpq::test_homogeneity_v(synthetic_result(6, 195, nullptr), id1, 1, alphas);
  Rng rng(2024);
  auto noisy = synthetic_result(42, 84, &rng);
  const auto res_a = lrpq::test_additive(noisy, id1, id1, 1, alphas);

  const double want_u[3] = {16.94, 13.68, 12.24};
  const double want_v[3] = {5.70, 4.07, 3.35};
  const double want_a[3] = {22.29, 19.03, 17.59};
  double worst = 0.0;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    worst = std::max(worst, std::abs(res_u.critical_values[a] - want_u[a]));
    worst = std::max(worst, std::abs(res_v.critical_values[a] - want_v[a]));
    worst = std::max(worst, std::abs(res_a.critical_values[a] - want_a[a]));
  }
  return {worst <= 0.01, fmt("nine published critical values within 0.01 (worst gap %.4f)", worst)};
}

Outcome criterion2() {
  Rng rng(42);
  const Index n = 4;
  const Index t = 3;
  const std::size_t p = 2;
  const double nt = static_cast<double>(n * t);
  double worst = 0.0;

  for (int rep = 0; rep < 200; ++rep) {
    const double tau = rng.uniform(0.15, 0.85);
    const double rho = rng.uniform(0.5, 2.0);
    std::vector<double> nu(p + 1);
    for (double& v : nu) v = rng.uniform(0.01, 0.3);
    const Mat y = oracle::random_normal(rng, n, t);
    std::vector<Mat> x;
    for (std::size_t j = 0; j < p; ++j) x.push_back(oracle::random_matrix(rng, n, t, -1.5, 1.5));

    lrpq::AdmmState state = lrpq::AdmmState::zeros(n, t, p);
    for (Mat* m : {&state.V, &state.W, &state.Z0, &state.Theta0, &state.U_v, &state.U_w,
                   &state.U_z0}) {
      *m = oracle::random_normal(rng, n, t);
    }
    for (std::size_t j = 0; j < p; ++j) {
      state.Z[j] = oracle::random_normal(rng, n, t);
      state.Theta[j] = oracle::random_normal(rng, n, t);
      state.U_z[j] = oracle::random_normal(rng, n, t);
    }

    {  // check-loss prox cells
      const Mat a = state.W - state.U_v;
      const Mat v = lrpq::prox_check_matrix(a, tau, rho);
      for (Index i = 0; i < n; ++i) {
        for (Index s = 0; s < t; ++s) {
          auto obj = [&](double value) {
            return oracle::check_loss(value, tau) +
                   0.5 * rho * (value - a(i, s)) * (value - a(i, s));
          };
          worst = std::max(worst,
                           std::abs(obj(v(i, s)) - obj(oracle::prox_scalar(a(i, s), tau, rho))));
        }
      }
    }

    {  // slope cells
      const Mat a = state.W + state.Z0 + state.U_w - y;
      std::vector<Mat> c(p);
      for (std::size_t j = 0; j < p; ++j) c[j] = state.Z[j] + state.U_z[j];
      const std::vector<Mat> theta = lrpq::update_slopes(a, x, c);
      for (Index i = 0; i < n; ++i) {
        for (Index s = 0; s < t; ++s) {
          Vec xv(p), cv(p), lib(p);
          for (std::size_t j = 0; j < p; ++j) {
            xv[static_cast<Index>(j)] = x[j](i, s);
            cv[static_cast<Index>(j)] = c[j](i, s);
            lib[static_cast<Index>(j)] = theta[j](i, s);
          }
          auto obj = [&](const Vec& th) {
            const double fit = a(i, s) + xv.dot(th);
            return fit * fit + (cv - th).squaredNorm();
          };
          const Mat lhs = Mat::Identity(static_cast<Index>(p), static_cast<Index>(p)) +
                          xv * xv.transpose();
          const Vec best = lhs.fullPivLu().solve(Vec(cv - a(i, s) * xv));
          worst = std::max(worst, std::abs(obj(lib) - obj(best)));
        }
      }
    }

    {  // nuclear blocks
      lrpq::AdmmState next = state;
      lrpq::update_nuclear_blocks(next, nu, rho);
      const Mat m0 = state.Z0 + state.U_z0;
      const double lam0 = nu[0] * nt / rho;
      worst = std::max(worst, std::abs(oracle::svt_objective(m0, next.Theta0, lam0) -
                                       oracle::svt_objective(
                                           m0, oracle::svt_prox_gradient(m0, lam0), lam0)));
      for (std::size_t j = 0; j < p; ++j) {
        const Mat mj = state.Theta[j] - state.U_z[j];
        const double lam = nu[j + 1] * nt / rho;
        worst = std::max(worst, std::abs(oracle::svt_objective(mj, next.Z[j], lam) -
                                         oracle::svt_objective(
                                             mj, oracle::svt_prox_gradient(mj, lam), lam)));
      }
    }

    {  // joint fit and intercept-consensus blocks
      Mat a_tilde = -y + state.U_w;
      for (std::size_t j = 0; j < p; ++j) a_tilde += x[j].cwiseProduct(state.Theta[j]);
      const Mat b_tilde = -state.V - state.U_v;
      const Mat c_tilde = -state.Theta0 + state.U_z0;
      auto obj = [&](const Mat& w, const Mat& z0) {
        return (a_tilde + w + z0).squaredNorm() + (b_tilde + w).squaredNorm() +
               (c_tilde + z0).squaredNorm();
      };
      lrpq::AdmmState next = state;
      lrpq::update_w_z0(next, y, x);
      const Mat w_best = (-a_tilde - 2.0 * b_tilde + c_tilde) / 3.0;
      const Mat z_best = (-a_tilde + b_tilde - 2.0 * c_tilde) / 3.0;
      worst = std::max(worst, std::abs(obj(next.W, next.Z0) - obj(w_best, z_best)));
    }
  }
  return {worst <= 1e-6,
          fmt("block updates match numeric oracles on 200 states (worst gap %.2e)", worst)};
}

Outcome criterion3() {
  Rng rng(77);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const Index k = 1 + static_cast<Index>(rng.below(3));
    const Index n = k + 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(12 - k)));
    const double tau = rng.uniform(0.1, 0.9);
    const Mat z = oracle::random_normal(rng, n, k);
    const Vec y = oracle::random_normal(rng, n, 1);
    const lrpq::QrResult fit = lrpq::solve_qr(lrpq::QrProblem(z, y, lrpq::QuantileIndex(tau)));
    const double best = oracle::qr_subset_objective(z, y, tau);
    worst = std::max(worst, std::abs(fit.objective - best) / std::max(1.0, std::abs(best)));
  }
  return {worst <= 1e-8,
          fmt("solve_qr matches the interpolating-subset oracle on 500 instances "
              "(worst relative gap %.2e)",
              worst)};
}

Outcome criterion4() {
  Rng rng(99);
  const double taus[3] = {0.3, 0.5, 0.7};
  double worst = 0.0;
  int converged = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 4;
    const Index t = 4;
    const Mat y = oracle::random_normal(rng, n, t);
    const std::vector<Mat> x{oracle::random_matrix(rng, n, t, -1.0, 1.0),
                             oracle::random_matrix(rng, n, t, -1.0, 1.0)};
    const double tau = taus[rep % 3];
    std::vector<double> nu(3);
    for (double& v : nu) v = rng.uniform(0.05, 0.2);

    lrpq::NnrConfig config;
    config.nu = nu;
    config.max_iter = 50000;
    config.tol_primal = 1e-10;
    config.tol_dual = 1e-10;
    const lrpq::NnrFit fit = lrpq::fit_nnr(y, x, lrpq::QuantileIndex(tau), config);
    converged += fit.diagnostics.converged ? 1 : 0;
    const double best = oracle::nnr_subgradient_best(y, x, tau, nu);
    worst = std::max(worst, std::abs(fit.diagnostics.objective - best));
  }
  return {converged == 20 && worst <= 1e-4,
          fmt("fit_nnr objective within 1e-4 of subgradient descent on 20 instances "
              "(%d/20 converged, worst gap %.2e)",
              converged, worst)};
}

Outcome criterion5() {
  lrpq::TableOptions opts;
  opts.reps = 50;
  opts.workers = 4;
  opts.seed = 20240601;
  const auto table =
      lrpq::run_table(lrpq::TableKind::rank, {{1, 75, 35, 0.5}, {5, 75, 35, 0.5}}, opts);
  double min_freq = 1.0;
  int failures = 0;
  for (const auto& cell : table.cells) {
    failures += cell.failures;
    for (std::size_t c = 0; c < cell.metrics.size(); ++c)
      min_freq = std::min(min_freq, effective_frequency(cell, c, opts.reps));
  }
  return {min_freq >= 0.95,
          fmt("correct-rank frequency over 50 reps, DGP1 and DGP5 at 75x35 "
              "(min across blocks %.3f, failures %d)",
              min_freq, failures)};
}

Outcome criterion6() {
  lrpq::TableOptions opts;
  opts.reps = 20;
  opts.workers = 4;
  opts.seed = 20240602;
  const auto table = lrpq::run_table(lrpq::TableKind::rmse, {{1, 75, 70, 0.5}}, opts);
  const auto& cell = table.cells.front();
  if (cell.failures > 0 || cell.draws.size() < 2 || cell.draws[1].empty())
    return {false, fmt("rmse table lost replications (failures %d)", cell.failures)};
  const double med = median_of(cell.draws[1]);
  return {med >= 0.10 && med <= 0.40,
          fmt("median slope RMSE over 20 reps, DGP1 at 75x70: %.3f in [0.10, 0.40]", med)};
}

Outcome criterion7() {
  lrpq::TableOptions opts;
  opts.reps = 100;
  opts.workers = 4;
  opts.seed = 20240603;
  opts.alpha = 0.05;
  const auto table =
      lrpq::run_table(lrpq::TableKind::size_power_homog, {{1, 75, 35, 0.5}}, opts);
  const auto& cell = table.cells.front();
  double lo = 1.0;
  double hi = 0.0;
  for (double m : cell.metrics) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  const bool ok = cell.failures == 0 && lo >= 0.0 && hi <= 0.12;
  return {ok,
          fmt("homogeneity-test size over 100 reps, DGP1 at 75x35: rejections in "
              "[%.3f, %.3f], failures %d",
              lo, hi, cell.failures)};
}

Outcome criterion8() {
  lrpq::TableOptions opts;
  opts.reps = 50;
  opts.workers = 4;
  opts.seed = 20240604;
  opts.alpha = 0.05;
  const auto homog =
      lrpq::run_table(lrpq::TableKind::size_power_homog, {{2, 75, 35, 0.5}}, opts);
  double homog_min = 1.0;
  for (std::size_t c = 0; c < homog.cells.front().metrics.size(); ++c)
    homog_min = std::min(homog_min, effective_frequency(homog.cells.front(), c, opts.reps));

  opts.seed = 20240605;
  const auto additive =
      lrpq::run_table(lrpq::TableKind::size_power_additive, {{5, 75, 70, 0.5}}, opts);
  const double additive_power = effective_frequency(additive.cells.front(), 1, opts.reps);

  return {homog_min >= 0.95 && additive_power >= 0.95,
          fmt("power over 50 reps: DGP2 homogeneity min %.3f, DGP5 additivity %.3f, "
              "failures %d+%d",
              homog_min, additive_power, homog.cells.front().failures,
              additive.cells.front().failures)};
}

Outcome criterion9() {
  Rng rng(31337);
  const int sims = 2000;
  const int n = 500;
  std::vector<double> xs(static_cast<std::size_t>(sims));
  const double b_n = lrpq::gumbel_b(n);
  for (int s = 0; s < sims; ++s) {
    double mx = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      mx = std::max(mx, z * z);
    }
    xs[static_cast<std::size_t>(s)] = 0.5 * mx - b_n;
  }
  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  for (int i = 0; i < sims; ++i) {
    const double g = std::exp(-std::exp(-xs[static_cast<std::size_t>(i)]));
    const double lo = static_cast<double>(i) / sims;
    const double hi = static_cast<double>(i + 1) / sims;
    ks = std::max({ks, g - lo, hi - g});
  }
  return {ks <= 0.05,
          fmt("centered chi-square maxima vs Gumbel limit: KS distance %.4f <= 0.05", ks)};
}

bool battery_pinball(Rng& rng) {
  for (int i = 0; i < 200; ++i) {
    const double u = rng.uniform(-5.0, 5.0);
    const double tau = rng.uniform(0.01, 0.99);
    if (std::abs(lrpq::check_loss(u, tau) + lrpq::check_loss(-u, tau) - std::abs(u)) > 1e-12)
      return false;
    if (std::abs(lrpq::check_loss(-u, 1.0 - tau) - lrpq::check_loss(u, tau)) > 1e-12)
      return false;
  }
  const Mat u = oracle::random_normal(rng, 6, 7);
  const double lhs = lrpq::mean_check_loss(u, 0.3) + lrpq::mean_check_loss(Mat(-u), 0.3);
  return std::abs(lhs - u.array().abs().mean()) <= 1e-12;
}

bool battery_svt(Rng& rng) {
  for (int i = 0; i < 40; ++i) {
    const Mat a = oracle::random_normal(rng, 5, 4);
    const Mat b = oracle::random_normal(rng, 5, 4);
    const double lam = rng.uniform(0.0, 3.0);
    if ((lrpq::svt_prox(a, lam) - lrpq::svt_prox(b, lam)).norm() > (a - b).norm() + 1e-10)
      return false;
  }
  return true;
}

bool battery_pca(Rng& rng) {
  for (int i = 0; i < 50; ++i) {
    const Mat x = oracle::random_normal(rng, 6, 5);
    const lrpq::PcaFit fit = lrpq::pca_fit(x, 2);
    const double err = (x - fit.common).norm();
    const Vec d = oracle::singular_values(x);
    double tail = 0.0;
    for (Index r = 2; r < d.size(); ++r) tail += d[r] * d[r];
    if (std::abs(err - std::sqrt(tail)) > 1e-9) return false;
    const Mat rival = oracle::random_normal(rng, 6, 2) * oracle::random_normal(rng, 2, 5);
    if ((x - rival).norm() + 1e-9 < err) return false;
  }
  return true;
}

bool battery_rotation() {
  Rng rng(808);
  const Index n = 9;
  const Index t = 8;
  const Mat u = oracle::random_normal(rng, n, 2);
  const Mat v = oracle::random_normal(rng, t, 2);
  const Mat theta1 = u * v.transpose();
  const Mat x = oracle::random_matrix(rng, n, t, 0.5, 1.5);
  const Mat y = Mat::Ones(n, t) + x.cwiseProduct(theta1);
  const std::vector<Mat> xs{x};
  const std::vector<Index> second{3, 4, 5};
  const std::vector<Index> target{0, 1, 2};

  Mat g(2, 2);
  g << 0.8, -0.6, 0.6, 0.8;
  const std::vector<Mat> factors{Mat::Ones(t, 1), v};
  const std::vector<Mat> rotated{Mat::Ones(t, 1), Mat(v * g)};
  const auto base = lrpq::stage2(y, xs, lrpq::QuantileIndex(0.5), factors, second, target);
  const auto rot = lrpq::stage2(y, xs, lrpq::QuantileIndex(0.5), rotated, second, target);
  for (std::size_t j = 0; j < 2; ++j) {
    const Mat diff = base.udot_target[j] * base.vdot[j].transpose() -
                     rot.udot_target[j] * rot.vdot[j].transpose();
    if (diff.cwiseAbs().maxCoeff() > 1e-7) return false;
  }
  return true;
}

bool battery_demeaning(Rng& rng) {
  auto result = synthetic_result(9, 6, &rng);
  const Index n = 9;
  const Index t = 6;
  const Vec a = oracle::random_normal(rng, n, 1);
  const Vec g = oracle::random_normal(rng, t, 1);
  result.theta_hat[1] = a * Mat::Ones(1, t) + Mat::Ones(n, 1) * g.transpose();

  const Mat id1 = Mat::Identity(1, 1);
  const auto res = lrpq::test_additive(result, id1, id1, 1);
  if (res.statistic > 1e-12) return false;
  const Mat annihilated = oracle::naive_demean(result.theta_hat[1], result.split.membership);
  if (annihilated.cwiseAbs().maxCoeff() > 1e-12) return false;

  const Mat raw = oracle::random_normal(rng, n, t);
  const Mat once = oracle::naive_demean(raw, result.split.membership);
  const Mat twice = oracle::naive_demean(once, result.split.membership);
  return (twice - once).cwiseAbs().maxCoeff() <= 1e-12;
}

bool battery_variance_loops() {
  Rng rng(909);
  const Index n = 6;
  const Index t = 5;
  const Mat u0 = oracle::random_normal(rng, n, 1);
  const Mat v0 = oracle::random_normal(rng, t, 1);
  const Mat theta1 = Mat::Constant(n, t, 1.5) + 0.1 * oracle::random_normal(rng, n, t);
  const Mat x = oracle::random_matrix(rng, n, t, 0.5, 1.5);
  const Mat y = u0 * v0.transpose() + x.cwiseProduct(theta1) +
                0.3 * oracle::random_normal(rng, n, t);
  const std::vector<Mat> xs{x};

  lrpq::ThreeStageOptions opts;
  opts.ranks = {1, 1};
  opts.pca_ranks = {1};
  opts.nnr.nu = {1e-4, 1e-4};
  opts.seed = 17;
  const auto result = lrpq::estimate(y, xs, lrpq::QuantileIndex(0.5), opts);
  const Mat eps = lrpq::residuals(y, xs, result.theta_hat);

  lrpq::KernelSpec spec;
  spec.bandwidth = 0.8;
  spec.lag_window = 2;
  const auto var = lrpq::variance_set(result, eps, result.pca, spec, 1);
  const auto naive = oracle::naive_variance(result, eps, result.pca[0].residual, 0.5, 0.8, 2,
                                            1, var.sigma_u, var.sigma_v);
  auto close = [](const Mat& got, const Mat& want) {
    return (got - want).norm() <= 1e-10 * std::max(1.0, want.norm());
  };
  return close(var.vhat_u, naive.vhat_u) && close(var.vhat_v, naive.vhat_v) &&
         close(var.omega_u, naive.omega_u) && close(var.omega_v, naive.omega_v) &&
         close(var.xi, naive.xi);
}

Outcome criterion10() {
  Rng rng(555);
  std::vector<std::string> failed;
  if (!battery_pinball(rng)) failed.push_back("pinball identity");
  if (!battery_svt(rng)) failed.push_back("SVT nonexpansiveness");
  if (!battery_pca(rng)) failed.push_back("PCA Eckart-Young");
  if (!battery_rotation()) failed.push_back("factor rotation invariance");
  if (!battery_demeaning(rng)) failed.push_back("double-demeaning");
  if (!battery_variance_loops()) failed.push_back("variance loop equivalence");
  if (failed.empty())
    return {true,
            "pinball, SVT, PCA, rotation, demeaning, and variance-loop invariants hold"};
  std::string detail = "failed batteries:";
  for (const auto& name : failed) detail += " " + name + ";";
  return {false, detail};
}

}  // namespace

int main() {
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, criterion6);
  run(7, criterion7);
  run(8, criterion8);
  run(9, criterion9);
  run(10, criterion10);
  std::printf("acceptance: %d of 10 criteria passed\n", 10 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
