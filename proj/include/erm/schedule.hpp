#pragma once

// Scalar schedules and parameter formulas of the doubly accelerated method.

#include <cmath>
#include <cstdint>
#include <limits>

#include "erm/error.hpp"

namespace erm {

/// theta_k = (k+1)/2. Defined for k >= -1 (theta_{-1} = 0).
inline double inner_theta(std::int64_t k) { return static_cast<double>(k + 1) / 2.0; }

/// theta_k theta_{k-1} = k(k+1)/4, formed from the integer product so that it
/// is exact and randomly accessible. theta_pair(0) = 0.
inline double inner_theta_pair(std::int64_t k) {
  return static_cast<double>(k * (k + 1)) / 4.0;
}

/// Outer schedule: (1 - 1/gamma)(s + 2)/2, which also gives theta~_0 = 1 - 1/gamma.
inline double outer_theta(double gamma, std::int64_t s) {
  return (1.0 - 1.0 / gamma) * static_cast<double>(s + 2) / 2.0;
}

/// (3 + sqrt(9 + 8 b/(m+1))) / 2, the minimizer of gamma_objective over gamma > 1.
inline double gamma_star(std::size_t m, std::size_t b) {
  detail::require(m >= 1 && b >= 1, "gamma_star needs m, b >= 1");
  const double ratio = static_cast<double>(b) / static_cast<double>(m + 1);
  return (3.0 + std::sqrt(9.0 + 8.0 * ratio)) / 2.0;
}

/// g(gamma) = (1 + gamma (m+1)/b) / (1 - 1/gamma)^2, the gamma-dependent factor of
/// the non-strongly-convex rate.
inline double gamma_objective(double gamma, std::size_t m, std::size_t b) {
  const double c = 1.0 - 1.0 / gamma;
  return (1.0 + gamma * static_cast<double>(m + 1) / static_cast<double>(b)) / (c * c);
}

/// eta = 1 / ((1 + gamma (m+1)/b) L)
inline double eta_default(double gamma, std::size_t m, std::size_t b, double smoothness) {
  detail::require(gamma > 0.0 && m >= 1 && b >= 1 && smoothness > 0.0,
                  "eta_default needs positive inputs");
  return 1.0 / ((1.0 + gamma * static_cast<double>(m + 1) / static_cast<double>(b)) * smoothness);
}

/// Right-hand side of the non-strongly-convex expected-gap bound after S stages.
inline double nonstrong_gap_bound(double initial_gap, double initial_dist_sq, double gamma,
                                  double eta, std::size_t m, std::size_t S) {
  const double s2 = static_cast<double>(S + 2) * static_cast<double>(S + 2);
  const double c = 1.0 - 1.0 / gamma;
  const double md = static_cast<double>(m);
  return 4.0 / s2 * initial_gap + 8.0 / (c * c * eta * s2 * (md + 1.0) * md) * initial_dist_sq;
}

/// Per-restart contraction factor
///   rho = 4 {(1 - 1/gamma)^2 + 4/(eta (m+1) m mu)} / {(1 - 1/gamma)^2 (S+2)^2}.
inline double restart_rate(double gamma, double eta, std::size_t m, double mu, std::size_t S) {
  detail::require(mu > 0.0, "strong convexity parameter must be positive");
  const double c = (1.0 - 1.0 / gamma) * (1.0 - 1.0 / gamma);
  const double md = static_cast<double>(m);
  const double s2 = static_cast<double>(S + 2) * static_cast<double>(S + 2);
  return 4.0 * (c + 4.0 / (eta * (md + 1.0) * md * mu)) / (c * s2);
}

/// Smallest S >= 1 with restart_rate(S) <= target.
inline std::size_t choose_S_for_rho(double gamma, double eta, std::size_t m, double mu,
                                    double target) {
  detail::require(mu > 0.0, "strong convexity parameter must be positive");
  detail::require(target > 0.0, "target rate must be positive");
  // rho(S) = A / (S+2)^2  =>  S = ceil(sqrt(A / target)) - 2, then fix rounding.
  const double a = restart_rate(gamma, eta, m, mu, 0) * 4.0;
  const double guess = std::ceil(std::sqrt(a / target)) - 2.0;
  detail::require(guess < 1e15, "restart interval too large");
  std::size_t S = guess < 1.0 ? 1 : static_cast<std::size_t>(guess);
  while (S > 1 && restart_rate(gamma, eta, m, mu, S - 1) <= target) --S;
  while (restart_rate(gamma, eta, m, mu, S) > target) ++S;
  return S;
}

}  // namespace erm
