#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "erm/dataset.hpp"

namespace erm {

/// Emitted once per outer stage by every solver. `evals` is the number of
/// component-gradient evaluations charged to this stage (n per full pass,
/// b per inner iteration, n per objective evaluation used for restarts).
struct StageReport {
  std::size_t stage = 0;
  std::uint64_t evals = 0;
  std::span<const double> x;
  bool restarted = false;
};

/// Return false to stop the solver after the current stage.
using StageObserver = std::function<bool(const StageReport&)>;

struct SolverResult {
  Vector x;         // solver output (last outer iterate, or average per the method)
  Vector last;      // last outer iterate
  Vector z;         // aggressive sequence (DASVRDA family only)
  std::size_t stages = 0;
  std::size_t restarts = 0;
  std::uint64_t evals = 0;
  bool stopped_early = false;
};

namespace detail {

/// Forwards a stage report, tracking totals. Returns false to stop.
inline bool report(const StageObserver& obs, SolverResult& res, std::uint64_t evals,
                   std::span<const double> x, bool restarted = false) {
  ++res.stages;
  res.evals += evals;
  if (!obs) return true;
  const bool go_on = obs(StageReport{res.stages, evals, x, restarted});
  if (!go_on) res.stopped_early = true;
  return go_on;
}

inline void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
                  std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = a * x[j] + b * y[j];
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * y[j];
  return s;
}

}  // namespace detail
}  // namespace erm
