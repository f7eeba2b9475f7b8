#pragma once

// Deterministic and stochastic baselines: proximal gradient (PG), accelerated
// proximal gradient (APG) and mini-batch proximal SVRG.

#include <span>
#include <vector>

#include "erm/estimator.hpp"
#include "erm/problem.hpp"
#include "erm/sampling.hpp"
#include "erm/solver.hpp"

namespace erm {

/// prox_{eta R}(x - eta grad F(x)). One full gradient.
inline Vector one_stage_pg(const Problem& p, std::span<const double> x, double eta) {
  detail::require(eta > 0.0, "step size must be positive");
  detail::require_dim(p, x);
  Vector g = full_gradient(p, x);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = x[j] - eta * g[j];
  p.prox(g, eta, g);
  return g;
}

/// S PG steps. `x` of the result is the average of the S stage outputs,
/// `last` the final iterate.
inline SolverResult run_pg(const Problem& p, std::span<const double> x0, double eta, std::size_t S,
                           const StageObserver& observer = {}) {
  detail::require(S >= 1, "stage count must be positive");
  SolverResult res;
  Vector x(x0.begin(), x0.end());
  Vector sum(p.d(), 0.0);
  std::size_t done = 0;
  for (std::size_t s = 1; s <= S; ++s) {
    x = one_stage_pg(p, x, eta);
    for (std::size_t j = 0; j < x.size(); ++j) sum[j] += x[j];
    ++done;
    if (!detail::report(observer, res, p.n(), x)) break;
  }
  for (double& v : sum) v /= static_cast<double>(done);
  res.x = std::move(sum);
  res.last = std::move(x);
  return res;
}

/// Nesterov/FISTA-style APG with theta_s = (s+1)/2, theta_0 = 0, x_{-1} = x_0.
/// Returns the last iterate.
inline SolverResult run_apg(const Problem& p, std::span<const double> x0, double eta, std::size_t S,
                            const StageObserver& observer = {}) {
  detail::require(S >= 1, "stage count must be positive");
  SolverResult res;
  Vector prev(x0.begin(), x0.end());  // x_{s-2}
  Vector cur = prev;                  // x_{s-1}
  Vector y(p.d());
  double theta_prev = 0.0;
  for (std::size_t s = 1; s <= S; ++s) {
    const double theta = (static_cast<double>(s) + 1.0) / 2.0;
    const double beta = (theta_prev - 1.0) / theta;
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = cur[j] + beta * (cur[j] - prev[j]);
    prev = std::move(cur);
    cur = one_stage_pg(p, y, eta);
    theta_prev = theta;
    if (!detail::report(observer, res, p.n(), cur)) break;
  }
  res.x = cur;
  res.last = std::move(cur);
  return res;
}

struct SvrgStage {
  Vector average;  // (1/m) sum_k x_k, the stage output
  Vector last;     // x_m
};

/// One proximal SVRG epoch of m mini-batch steps anchored at x~.
/// Cost: n + m b component gradients.
inline SvrgStage one_stage_svrg(const Problem& p, std::span<const double> anchor, double eta,
                                std::size_t m, std::size_t b, const SamplingScheme& scheme,
                                RngStream& rng) {
  detail::require(eta > 0.0, "step size must be positive");
  detail::require(m >= 1, "epoch length must be positive");
  detail::require_dim(p, anchor);
  const VarianceReducedGradient est(p, anchor);
  Vector x(anchor.begin(), anchor.end());
  Vector g(p.d()), sum(p.d(), 0.0);
  std::vector<std::size_t> batch;
  std::vector<double> coef, scratch;
  for (std::size_t k = 1; k <= m; ++k) {
    scheme.draw_batch(rng, b, batch);
    est.estimate(scheme, batch, x, g, coef, scratch);
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = x[j] - eta * g[j];
    p.prox(g, eta, x);
    for (std::size_t j = 0; j < x.size(); ++j) sum[j] += x[j];
  }
  for (double& v : sum) v /= static_cast<double>(m);
  return {std::move(sum), std::move(x)};
}

/// S chained SVRG epochs, each started from the previous epoch's averaged
/// output. `x` of the result is (1/S) sum_s x~_s, `last` is x~_S.
inline SolverResult run_svrg(const Problem& p, std::span<const double> x0, double eta,
                             std::size_t m, std::size_t b, const SamplingScheme& scheme,
                             RngStream& rng, std::size_t S, const StageObserver& observer = {}) {
  detail::require(S >= 1, "stage count must be positive");
  SolverResult res;
  Vector x(x0.begin(), x0.end());
  Vector sum(p.d(), 0.0);
  std::size_t done = 0;
  for (std::size_t s = 1; s <= S; ++s) {
    x = one_stage_svrg(p, x, eta, m, b, scheme, rng).average;
    for (std::size_t j = 0; j < x.size(); ++j) sum[j] += x[j];
    ++done;
    if (!detail::report(observer, res, p.n() + m * b, x)) break;
  }
  for (double& v : sum) v /= static_cast<double>(done);
  res.x = std::move(sum);
  res.last = std::move(x);
  return res;
}

}  // namespace erm
