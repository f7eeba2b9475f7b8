#pragma once

// Doubly accelerated SVRDA: the one-stage accelerated SVRDA inner loop, the
// DASVRG inner variant, the outer momentum loop (non-strongly convex form),
// fixed-interval and adaptive restarts, and the warm-start schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "erm/estimator.hpp"
#include "erm/lazy.hpp"
#include "erm/problem.hpp"
#include "erm/sampling.hpp"
#include "erm/schedule.hpp"
#include "erm/solver.hpp"

namespace erm {

enum class InnerVariant { AccSvrda, Dasvrg };
enum class Engine { Auto, Dense, Lazy };

/// Density below which Engine::Auto selects the lazy engine.
inline constexpr double kLazyDensityThreshold = 0.25;

/// Inner iterate after iteration k of a stage.
struct InnerSnapshot {
  std::size_t k = 0;
  std::span<const double> x;
  std::span<const double> z;
};
using InnerObserver = std::function<void(const InnerSnapshot&)>;

struct StageOutput {
  Vector x;  // x_m
  Vector z;  // z_m
  bool lazy = false;
  lazy::LazyStats stats;
};

/// Whether a stage on `p` runs lazily under `engine`.
inline bool use_lazy(const Problem& p, Engine engine) {
  switch (engine) {
    case Engine::Dense:
      return false;
    case Engine::Lazy:
      if (!p.elastic_net()) throw Error("lazy path requires linear loss + elastic net");
      return true;
    case Engine::Auto:
      break;
  }
  return p.elastic_net() != nullptr && p.data().density() < kLazyDensityThreshold;
}

namespace detail {

inline void check_stage_args(const Problem& p, std::span<const double> y,
                             std::span<const double> anchor, double eta, std::size_t m,
                             std::size_t b) {
  require(eta > 0.0, "step size must be positive");
  require(m >= 1, "inner length must be positive");
  require(b >= 1, "batch size must be positive");
  require_dim(p, y);
  require_dim(p, anchor);
}

inline StageOutput dense_accsvrda(const Problem& p, std::span<const double> y0,
                                  const VarianceReducedGradient& est, double eta, std::size_t m,
                                  std::size_t b, const SamplingScheme& scheme, RngStream& rng,
                                  const InnerObserver& observer) {
  const std::size_t d = p.d();
  Vector z0(y0.begin(), y0.end());
  Vector x = z0, z = z0, y(d), g(d), gbar(d, 0.0), arg(d);
  std::vector<std::size_t> batch;
  std::vector<double> coef, scratch;
  for (std::size_t k = 1; k <= m; ++k) {
    scheme.draw_batch(rng, b, batch);
    const double theta = inner_theta(static_cast<std::int64_t>(k));
    const double w_old = 1.0 - 1.0 / theta, w_new = 1.0 / theta;
    for (std::size_t j = 0; j < d; ++j) y[j] = w_old * x[j] + w_new * z[j];
    est.estimate(scheme, batch, y, g, coef, scratch);
    const double tau = eta * inner_theta_pair(static_cast<std::int64_t>(k));
    for (std::size_t j = 0; j < d; ++j) {
      gbar[j] = w_old * gbar[j] + w_new * g[j];
      arg[j] = z0[j] - tau * gbar[j];
    }
    p.prox(arg, tau, z);
    for (std::size_t j = 0; j < d; ++j) x[j] = w_old * x[j] + w_new * z[j];
    if (observer) observer({k, x, z});
  }
  return {std::move(x), std::move(z), false, {}};
}

inline StageOutput lazy_accsvrda(const Problem& p, std::span<const double> y0,
                                 const VarianceReducedGradient& est, double eta, std::size_t m,
                                 std::size_t b, const SamplingScheme& scheme, RngStream& rng,
                                 const InnerObserver& observer) {
  lazy::AccSvrdaStage stage(p, est, y0, eta, m);
  std::vector<std::size_t> batch;
  Vector xs, zs;
  if (observer) {
    xs.resize(p.d());
    zs.resize(p.d());
  }
  for (std::size_t k = 1; k <= m; ++k) {
    scheme.draw_batch(rng, b, batch);
    stage.step(scheme, batch);
    if (observer) {
      stage.materialize(xs, zs);
      observer({k, xs, zs});
    }
  }
  auto [x, z] = stage.finish();
  return {std::move(x), std::move(z), true, stage.stats()};
}

}  // namespace detail

/// One stage of accelerated SVRDA started at y~ with variance-reduction anchor
/// x~. Costs n + m b component gradients.
inline StageOutput one_stage_accsvrda(const Problem& p, std::span<const double> y_tilde,
                                      std::span<const double> anchor, double eta, std::size_t m,
                                      std::size_t b, const SamplingScheme& scheme, RngStream& rng,
                                      Engine engine = Engine::Dense,
                                      const InnerObserver& observer = {}) {
  detail::check_stage_args(p, y_tilde, anchor, eta, m, b);
  const bool lazy = use_lazy(p, engine);
  const VarianceReducedGradient est(p, anchor);
  if (lazy) return detail::lazy_accsvrda(p, y_tilde, est, eta, m, b, scheme, rng, observer);
  return detail::dense_accsvrda(p, y_tilde, est, eta, m, b, scheme, rng, observer);
}

/// Lazy-only entry point; throws unless the regularizer is an elastic net.
inline StageOutput lazy_one_stage_accsvrda(const Problem& p, std::span<const double> y_tilde,
                                           std::span<const double> anchor, double eta,
                                           std::size_t m, std::size_t b,
                                           const SamplingScheme& scheme, RngStream& rng,
                                           const InnerObserver& observer = {}) {
  return one_stage_accsvrda(p, y_tilde, anchor, eta, m, b, scheme, rng, Engine::Lazy, observer);
}

/// DASVRG inner stage: z_k = prox_{eta theta_{k-1} R}(z_{k-1} - eta theta_{k-1} g_k).
/// Dense only.
inline StageOutput one_stage_dasvrg(const Problem& p, std::span<const double> y_tilde,
                                    std::span<const double> anchor, double eta, std::size_t m,
                                    std::size_t b, const SamplingScheme& scheme, RngStream& rng,
                                    const InnerObserver& observer = {}) {
  detail::check_stage_args(p, y_tilde, anchor, eta, m, b);
  const VarianceReducedGradient est(p, anchor);
  const std::size_t d = p.d();
  Vector x(y_tilde.begin(), y_tilde.end());
  Vector z = x, y(d), g(d), arg(d);
  std::vector<std::size_t> batch;
  std::vector<double> coef, scratch;
  for (std::size_t k = 1; k <= m; ++k) {
    scheme.draw_batch(rng, b, batch);
    const double theta = inner_theta(static_cast<std::int64_t>(k));
    const double w_old = 1.0 - 1.0 / theta, w_new = 1.0 / theta;
    for (std::size_t j = 0; j < d; ++j) y[j] = w_old * x[j] + w_new * z[j];
    est.estimate(scheme, batch, y, g, coef, scratch);
    const double tau = eta * inner_theta(static_cast<std::int64_t>(k) - 1);
    for (std::size_t j = 0; j < d; ++j) arg[j] = z[j] - tau * g[j];
    p.prox(arg, tau, z);
    for (std::size_t j = 0; j < d; ++j) x[j] = w_old * x[j] + w_new * z[j];
    if (observer) observer({k, x, z});
  }
  return {std::move(x), std::move(z), false, {}};
}

/// Outer iterates; `s` counts the stages run since the last (re)start.
struct OuterState {
  Vector x_prev2;  // x~_{s-2}
  Vector x_prev;   // x~_{s-1}
  Vector z_prev;   // z~_{s-1}
  std::size_t s = 0;

  /// x~_{-1} = z~_0.
  static OuterState start(std::span<const double> x0, std::span<const double> z0) {
    return {Vector(z0.begin(), z0.end()), Vector(x0.begin(), x0.end()),
            Vector(z0.begin(), z0.end()), 0};
  }

  void advance(Vector x, Vector z) {
    x_prev2 = std::move(x_prev);
    x_prev = std::move(x);
    z_prev = std::move(z);
    ++s;
  }

  /// x~_{-1} = x~_0 = z~_0 = x.
  void restart_at(std::span<const double> x) {
    x_prev.assign(x.begin(), x.end());
    x_prev2 = x_prev;
    z_prev = x_prev;
    s = 0;
  }
};

/// y~_s = x~_{s-1} + ((th_{s-1} - 1)/th_s)(x~_{s-1} - x~_{s-2}) + (th_{s-1}/th_s)(z~_{s-1} - x~_{s-1})
inline Vector outer_momentum(const OuterState& st, double gamma, std::size_t s) {
  detail::require(s >= 1, "outer stage index starts at 1");
  const double th = outer_theta(gamma, static_cast<std::int64_t>(s));
  const double th_prev = outer_theta(gamma, static_cast<std::int64_t>(s) - 1);
  const double a = (th_prev - 1.0) / th;
  const double c = th_prev / th;
  Vector y(st.x_prev.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double xp = st.x_prev[j];
    y[j] = xp + a * (xp - st.x_prev2[j]) + c * (st.z_prev[j] - xp);
  }
  return y;
}

struct DasvrdaParams {
  double gamma = 0.0;  // 0: gamma_star(m, b)
  double eta = 0.0;    // 0: eta_default(gamma, m, b, L)
  std::size_t m = 0;   // 0: max(1, n/b)
  std::size_t b = 1;
  std::size_t S = 1;  // stages per run (per restart for the restarted variants)
  std::size_t T = 1;  // fixed restarts
  InnerVariant variant = InnerVariant::AccSvrda;
  Engine engine = Engine::Auto;
  bool theory = false;  // enforce gamma >= 3
};

struct ResolvedParams {
  double gamma = 0.0;
  double eta = 0.0;
  std::size_t m = 0;
  std::size_t b = 0;
  std::size_t S = 0;
  std::size_t T = 0;
  InnerVariant variant = InnerVariant::AccSvrda;
  bool lazy = false;
  std::vector<std::string> warnings;
};

/// Smoothness constant used for the default step: the mean L_i under
/// importance sampling, max L_i under uniform or partition sampling.
inline double step_smoothness(const Problem& p, const SamplingScheme& scheme) {
  return scheme.kind() == SamplingScheme::Kind::IidWeighted ? p.mean_smoothness()
                                                            : p.max_smoothness();
}

inline std::size_t default_epoch_length(std::size_t n, std::size_t b) {
  return std::max<std::size_t>(1, n / std::max<std::size_t>(1, b));
}

inline ResolvedParams resolve(const DasvrdaParams& in, const Problem& p,
                              const SamplingScheme& scheme) {
  detail::require(in.b >= 1 && in.b <= p.n(), "batch size must lie in [1, n]");
  detail::require(in.S >= 1, "stage count must be positive");
  detail::require(in.T >= 1, "restart count must be positive");
  detail::require(scheme.n() == p.n(), "sampling scheme size does not match the problem");
  ResolvedParams r;
  r.b = in.b;
  r.S = in.S;
  r.T = in.T;
  r.variant = in.variant;
  r.m = in.m ? in.m : default_epoch_length(p.n(), in.b);
  r.gamma = in.gamma != 0.0 ? in.gamma : gamma_star(r.m, r.b);
  detail::require(std::isfinite(r.gamma) && r.gamma > 1.0, "gamma must exceed 1");
  if (r.gamma < 3.0) {
    detail::require(!in.theory, "gamma below 3 is outside the convergence theory");
    r.warnings.push_back("gamma " + std::to_string(r.gamma) +
                         " < 3: convergence guarantees do not apply");
  }
  r.eta = in.eta != 0.0 ? in.eta : eta_default(r.gamma, r.m, r.b, step_smoothness(p, scheme));
  detail::require(std::isfinite(r.eta) && r.eta > 0.0, "step size must be positive");
  if (r.variant == InnerVariant::Dasvrg) {
    detail::require(in.engine != Engine::Lazy, "lazy updates are not available for DASVRG");
    r.lazy = false;
  } else {
    r.lazy = use_lazy(p, in.engine);
  }
  return r;
}

struct DasvrdaResult : SolverResult {
  bool lazy = false;
  lazy::LazyStats lazy_stats;
};

namespace detail {

inline StageOutput run_stage(const Problem& p, std::span<const double> y,
                             std::span<const double> anchor, const ResolvedParams& r,
                             std::size_t m, const SamplingScheme& scheme, RngStream& rng) {
  if (r.variant == InnerVariant::Dasvrg)
    return one_stage_dasvrg(p, y, anchor, r.eta, m, r.b, scheme, rng);
  return one_stage_accsvrda(p, y, anchor, r.eta, m, r.b, scheme, rng,
                            r.lazy ? Engine::Lazy : Engine::Dense);
}

inline void absorb(DasvrdaResult& res, const StageOutput& out) {
  res.lazy = res.lazy || out.lazy;
  res.lazy_stats.touched += out.stats.touched;
  res.lazy_stats.final_sweep += out.stats.final_sweep;
  res.lazy_stats.max_active = std::max(res.lazy_stats.max_active, out.stats.max_active);
}

inline std::uint64_t stage_cost(const Problem& p, std::size_t m, std::size_t b) {
  return static_cast<std::uint64_t>(p.n()) + static_cast<std::uint64_t>(m) * b;
}

/// One outer stage: momentum, inner stage anchored at x~_{s-1}, state update.
/// Returns y~_s.
inline Vector outer_step(const Problem& p, OuterState& st, const ResolvedParams& r, std::size_t m,
                         const SamplingScheme& scheme, RngStream& rng, DasvrdaResult& res) {
  Vector y = outer_momentum(st, r.gamma, st.s + 1);
  StageOutput out = run_stage(p, y, st.x_prev, r, m, scheme, rng);
  absorb(res, out);
  st.advance(std::move(out.x), std::move(out.z));
  return y;
}

inline void finish(DasvrdaResult& res, const OuterState& st) {
  res.x = st.x_prev;
  res.last = st.x_prev;
  res.z = st.z_prev;
}

/// S outer stages from `st`. Returns false if the observer stopped the run.
inline bool ns_loop(const Problem& p, OuterState& st, const ResolvedParams& r, std::size_t m,
                    const SamplingScheme& scheme, RngStream& rng, const StageObserver& observer,
                    DasvrdaResult& res, bool flag_last) {
  for (std::size_t s = 1; s <= r.S; ++s) {
    outer_step(p, st, r, m, scheme, rng, res);
    const bool restarted = flag_last && s == r.S;
    if (!report(observer, res, stage_cost(p, m, r.b), st.x_prev, restarted)) return false;
  }
  return true;
}

}  // namespace detail

/// Non-strongly-convex outer loop from (x~_0, z~_0); returns x~_S.
inline DasvrdaResult run_dasvrda_ns(const Problem& p, std::span<const double> x0,
                                    std::span<const double> z0, const DasvrdaParams& params,
                                    const SamplingScheme& scheme, RngStream& rng,
                                    const StageObserver& observer = {}) {
  detail::require_dim(p, x0);
  detail::require_dim(p, z0);
  const ResolvedParams r = resolve(params, p, scheme);
  DasvrdaResult res;
  OuterState st = OuterState::start(x0, z0);
  detail::ns_loop(p, st, r, r.m, scheme, rng, observer, res, false);
  detail::finish(res, st);
  return res;
}

/// T fixed restarts of S stages, each seeded with x~_0 = z~_0 = previous output.
inline DasvrdaResult run_dasvrda_sc(const Problem& p, std::span<const double> x0,
                                    const DasvrdaParams& params, const SamplingScheme& scheme,
                                    RngStream& rng, const StageObserver& observer = {}) {
  detail::require_dim(p, x0);
  const ResolvedParams r = resolve(params, p, scheme);
  DasvrdaResult res;
  OuterState st = OuterState::start(x0, x0);
  for (std::size_t t = 1; t <= r.T; ++t) {
    if (!detail::ns_loop(p, st, r, r.m, scheme, rng, observer, res, t < r.T)) break;
    if (t < r.T) {
      const Vector x = st.x_prev;
      st.restart_at(x);
      ++res.restarts;
    }
  }
  detail::finish(res, st);
  return res;
}

enum class RestartKind { Function, Gradient };

/// Inputs of the adaptive restart tests. Function: objective at x~_s and
/// x~_{s-1}. Gradient: y~_s, x~_s and the lookahead y~_{s+1}.
struct RestartProbe {
  double objective_prev = 0.0;
  double objective_cur = 0.0;
  std::span<const double> y_cur;
  std::span<const double> x_cur;
  std::span<const double> y_next;
};

inline bool adaptive_restart_check(RestartKind kind, const RestartProbe& probe) {
  if (kind == RestartKind::Function) return probe.objective_cur > probe.objective_prev;
  double dot = 0.0;
  for (std::size_t j = 0; j < probe.x_cur.size(); ++j)
    dot += (probe.y_cur[j] - probe.x_cur[j]) * (probe.y_next[j] - probe.x_cur[j]);
  return dot > 0.0;
}

/// Outer loop with adaptive restarts for `params.S` stages in total. On a
/// restart x~_{-1} = x~_0 = z~_0 = x~_s and the momentum schedule starts over.
/// The function test charges n evaluations per objective (including P(x~_0)).
inline DasvrdaResult run_dasvrda_adaptive(const Problem& p, std::span<const double> x0,
                                          const DasvrdaParams& params, RestartKind kind,
                                          const SamplingScheme& scheme, RngStream& rng,
                                          const StageObserver& observer = {}) {
  detail::require_dim(p, x0);
  const ResolvedParams r = resolve(params, p, scheme);
  DasvrdaResult res;
  OuterState st = OuterState::start(x0, x0);
  double f_prev = 0.0;
  std::uint64_t pending = 0;
  if (kind == RestartKind::Function) {
    f_prev = objective(p, x0);
    pending = p.n();
  }
  for (std::size_t total = 1; total <= r.S; ++total) {
    const Vector y = detail::outer_step(p, st, r, r.m, scheme, rng, res);
    std::uint64_t cost = detail::stage_cost(p, r.m, r.b) + pending;
    pending = 0;
    bool restart = false;
    if (kind == RestartKind::Function) {
      const double f = objective(p, st.x_prev);
      cost += p.n();
      restart = adaptive_restart_check(kind, {f_prev, f, {}, {}, {}});
      f_prev = f;
    } else {
      const Vector y_next = outer_momentum(st, r.gamma, st.s + 1);
      restart = adaptive_restart_check(kind, {0.0, 0.0, y, st.x_prev, y_next});
    }
    if (restart) {
      const Vector x = st.x_prev;
      st.restart_at(x);
      ++res.restarts;
    }
    if (!detail::report(observer, res, cost, st.x_prev, restart)) break;
  }
  detail::finish(res, st);
  return res;
}

/// Inner lengths m_0, ..., m_U with m_u = ceil(sqrt(gamma (m_{u-1} + 1) m_{u-1})).
inline std::vector<std::size_t> warm_schedule(double gamma, std::size_t m0, std::size_t U) {
  detail::require(gamma > 1.0, "gamma must exceed 1");
  detail::require(m0 >= 1, "initial inner length must be positive");
  std::vector<std::size_t> ms{m0};
  for (std::size_t u = 1; u <= U; ++u) {
    const double prev = static_cast<double>(ms.back());
    const double next = std::ceil(std::sqrt(gamma * (prev + 1.0) * prev));
    detail::require(next < 1e12, "warm-start schedule overflow");
    ms.push_back(static_cast<std::size_t>(next));
  }
  return ms;
}

/// m_U' = ceil(sqrt((m_U + 1) m_U) / (1 - 1/gamma)).
inline std::size_t warm_final_length(double gamma, std::size_t mU) {
  const double v = static_cast<double>(mU);
  return static_cast<std::size_t>(std::ceil(std::sqrt((v + 1.0) * v) / (1.0 - 1.0 / gamma)));
}

/// U = ceil(log_{sqrt(gamma)}(m / m0)), at least 0.
inline std::size_t warm_default_rounds(double gamma, std::size_t m, std::size_t m0) {
  detail::require(gamma > 1.0 && m0 >= 1, "invalid warm-start inputs");
  if (m <= m0) return 0;
  const double u = std::ceil(std::log(static_cast<double>(m) / static_cast<double>(m0)) /
                             std::log(std::sqrt(gamma)));
  return static_cast<std::size_t>(std::max(0.0, u));
}

/// m_0 = min(ceil(sqrt((1 + gamma (m+1)/b) L ||x~_0 - x*||^2 / gap)), m), at least 1.
/// `dist_sq` and `gap` are estimates of ||x~_0 - x*||^2 and P(x~_0) - P(x*).
inline std::size_t warm_initial_length(double gamma, std::size_t m, std::size_t b,
                                       double smoothness, double dist_sq, double gap) {
  if (!(gap > 0.0) || !(dist_sq > 0.0)) return 1;
  const double v = std::ceil(std::sqrt((1.0 + gamma * static_cast<double>(m + 1) /
                                                  static_cast<double>(b)) *
                                       smoothness * dist_sq / gap));
  if (!(v < static_cast<double>(m))) return std::max<std::size_t>(m, 1);
  return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

/// U warm-up stages (x~_u, z~_u) = OneStage(z~_{u-1}, x~_{u-1}, eta, m_u) with
/// eta taken from m_U', followed by the outer loop with inner length m_U'.
/// params.m only feeds the default gamma; m0 and U define the schedule.
inline DasvrdaResult run_dasvrda_warm(const Problem& p, std::span<const double> x0,
                                      std::size_t m0, std::size_t U, const DasvrdaParams& params,
                                      const SamplingScheme& scheme, RngStream& rng,
                                      const StageObserver& observer = {}) {
  detail::require_dim(p, x0);
  const std::size_t m_target = params.m ? params.m : default_epoch_length(p.n(), params.b);
  const double gamma = params.gamma != 0.0 ? params.gamma : gamma_star(m_target, params.b);
  const std::vector<std::size_t> ms = warm_schedule(gamma, m0, U);
  DasvrdaParams tail = params;
  tail.gamma = gamma;
  tail.m = warm_final_length(gamma, ms.back());
  const ResolvedParams r = resolve(tail, p, scheme);

  DasvrdaResult res;
  Vector x(x0.begin(), x0.end()), z = x;
  for (std::size_t u = 1; u <= U; ++u) {
    StageOutput out = detail::run_stage(p, z, x, r, ms[u], scheme, rng);
    detail::absorb(res, out);
    x = std::move(out.x);
    z = std::move(out.z);
    if (!detail::report(observer, res, detail::stage_cost(p, ms[u], r.b), x)) {
      res.x = res.last = x;
      res.z = z;
      return res;
    }
  }
  OuterState st = OuterState::start(x, z);
  detail::ns_loop(p, st, r, r.m, scheme, rng, observer, res, false);
  detail::finish(res, st);
  return res;
}

}  // namespace erm
