#pragma once

// Lazy (deferred) coordinate updates for one accelerated SVRDA stage on sparse
// data with an elastic-net regularizer.
//
// A coordinate j that no sampled row touches between iterations k_j and k sees
// the constant gradient grad~_j, so its dual-averaged z-iterate has the closed
// form lazy_z() and the primal average x can be replayed through prefix sums
// over the iterations where z_{k'-1, j} is positive (K+) or negative (K-).
// Per-iteration work is proportional to the number of coordinates touched by
// the batch, plus one final sweep over [d].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "erm/estimator.hpp"
#include "erm/problem.hpp"
#include "erm/sampling.hpp"
#include "erm/schedule.hpp"

namespace erm::lazy {

/// Closed integer interval [lo, hi]; empty when lo > hi.
struct Interval {
  std::int64_t lo = 1;
  std::int64_t hi = 0;

  bool empty() const { return lo > hi; }
  std::int64_t size() const { return empty() ? 0 : hi - lo + 1; }
  bool contains(std::int64_t k) const { return lo <= k && k <= hi; }
};

/// Union of at most two disjoint intervals.
struct KSet {
  Interval parts[2];
  int count = 0;

  void add(Interval iv) {
    if (!iv.empty()) parts[count++] = iv;
  }
  bool contains(std::int64_t k) const {
    for (int p = 0; p < count; ++p)
      if (parts[p].contains(k)) return true;
    return false;
  }
  std::int64_t size() const {
    std::int64_t s = 0;
    for (int p = 0; p < count; ++p) s += parts[p].size();
    return s;
  }
  bool empty() const { return count == 0; }
};

struct KSets {
  KSet plus;   // z_0 > M+_{k'}: z_{k'-1} = (z_0 - M+)/(1 + eta pair lambda2) > 0
  KSet minus;  // z_0 < M-_{k'}: z_{k'-1} = (z_0 - M-)/(1 + eta pair lambda2) < 0
};

/// M(k') = c k'(k'-1) + c3 with c = c1 +- c2. The same expression is used for
/// root validation and by any pointwise check, so the two always agree.
inline double threshold_m(double c, double c3, std::int64_t kp) {
  return c * static_cast<double>(kp * (kp - 1)) + c3;
}

namespace detail {

/// Upper root of x^2 - x = tau, i.e. (1 + sqrt(1 + 4 tau))/2; NaN when none.
inline double upper_root(double tau) {
  const double disc = 1.0 + 4.0 * tau;
  if (!(disc > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * (1.0 + std::sqrt(disc));
}

inline std::int64_t clamp_guess(double v, std::int64_t lo, std::int64_t hi) {
  if (std::isnan(v)) return lo;
  if (v <= static_cast<double>(lo)) return lo;
  if (v >= static_cast<double>(hi)) return hi;
  return static_cast<std::int64_t>(v);
}

/// Largest B in [lo-1, hi] with pred true on [lo, B], for pred that is true
/// on a prefix of [lo, hi]. `guess` is a root-based estimate that is then
/// validated by direct evaluation (a few steps, bisection as a fallback).
template <class Pred>
std::int64_t prefix_end(const Pred& pred, std::int64_t lo, std::int64_t hi, std::int64_t guess) {
  guess = std::clamp(guess, lo - 1, hi);
  for (int step = 0; step < 4; ++step) {
    const bool in = guess < lo || pred(guess);
    const bool next_out = guess == hi || !pred(guess + 1);
    if (in && next_out) return guess;
    guess += in ? 1 : -1;
  }
  std::int64_t a = lo - 1, b = hi;  // pred true up to a, answer in [a, b]
  if (pred(hi)) return hi;
  b = hi - 1;
  while (a < b) {
    const std::int64_t mid = a + (b - a + 1) / 2;
    if (pred(mid))
      a = mid;
    else
      b = mid - 1;
  }
  return a;
}

/// Smallest B in [lo, hi+1] with pred true on [B, hi].
template <class Pred>
std::int64_t suffix_begin(const Pred& pred, std::int64_t lo, std::int64_t hi, std::int64_t guess) {
  auto negated = [&](std::int64_t k) { return !pred(k); };
  return prefix_end(negated, lo, hi, guess - 1) + 1;
}

/// {k' in [lo, hi] : sign * (z0 - M(k')) > 0} with M(k') = c k'(k'-1) + c3.
/// sign = +1 gives K+, sign = -1 gives K-. On k' >= 2, k'(k'-1) is increasing,
/// so the set is a prefix or a suffix of [lo, hi] depending on sign * c.
inline Interval monotone_set(double c, double c3, double z0, int sign, std::int64_t lo,
                             std::int64_t hi) {
  auto pred = [&](std::int64_t kp) {
    const double m = threshold_m(c, c3, kp);
    return sign > 0 ? z0 > m : z0 < m;
  };
  if (lo > hi) return {};
  if (c == 0.0) return pred(lo) ? Interval{lo, hi} : Interval{};
  // Boundary estimate: k'(k'-1) = (z0 - c3)/c.
  const double root = upper_root((z0 - c3) / c);
  if (sign * c > 0.0) {
    // Quadratic rises through z0 from below (K+, c > 0) or the mirrored K-, c < 0
    // case: the set is the part of [lo, hi] left of the upper root.
    const double est = std::isnan(root) ? static_cast<double>(lo - 1) : std::ceil(root) - 1.0;
    const std::int64_t end = prefix_end(pred, lo, hi, clamp_guess(est, lo - 1, hi));
    return {lo, end};
  }
  const double est = std::isnan(root) ? static_cast<double>(lo) : std::floor(root) + 1.0;
  const std::int64_t begin = suffix_begin(pred, lo, hi, clamp_guess(est, lo, hi + 1));
  return {begin, hi};
}

}  // namespace detail

/// K+ and K- within [k_j + 2, k] for the constants
///   c1 = eta grad~_j / 4,  c2 = eta lambda1 / 4,  c3 = eta gsum_{k_j} - eta theta_{k_j} theta_{k_j-1} grad~_j.
///
/// The five sign cases of (c1 - c2, c1 + c2) reduce, per set, to the sign of its
/// quadratic coefficient c = c1 +- c2:
///   c > 0 with D <= 0      -> K+ empty,  K- everything
///   c > 0 with D > 0       -> K+ prefix, K- suffix  (left of / right of the upper root)
///   c = 0                  -> all or nothing by sign(z0 - c3)
///   c < 0                  -> mirror image of c > 0
/// where D = c^2 + 4 c (z0 - c3) and the roots of c x^2 - c x + c3 = z0 are
/// (c +- sqrt(D)) / (2c). The lower root never exceeds 1/2, so within
/// [k_j + 2, k] each set is a single interval. Boundaries are validated
/// pointwise against threshold_m().
inline KSets compute_k_sets(double c1, double c2, double c3, double z0, std::int64_t kj,
                            std::int64_t k) {
  ::erm::detail::require(c2 >= 0.0, "c2 must be nonnegative");
  KSets out;
  const std::int64_t lo = kj + 2;
  if (k < lo) return out;
  out.plus.add(detail::monotone_set(c1 + c2, c3, z0, +1, lo, k));
  out.minus.add(detail::monotone_set(c1 - c2, c3, z0, -1, lo, k));
  return out;
}

/// Prefix sums over k' = 1..K of
///   S_k  = sum theta_{k'-2} / (1 + eta theta_{k'-1} theta_{k'-2} lambda2)
///   S'_k = sum theta_{k'-1} theta_{k'-2}^2 / (1 + eta theta_{k'-1} theta_{k'-2} lambda2)
/// with S_0 = S'_0 = 0.
class PrefixTables {
 public:
  PrefixTables(double eta, double lambda2, std::int64_t max_k) : s_(max_k + 1, 0.0), sp_(max_k + 1, 0.0) {
    for (std::int64_t kp = 1; kp <= max_k; ++kp) {
      const double pair = inner_theta_pair(kp - 1);
      const double th2 = inner_theta(kp - 2);
      const double den = 1.0 + eta * pair * lambda2;
      s_[kp] = s_[kp - 1] + th2 / den;
      sp_[kp] = sp_[kp - 1] + pair * th2 / den;
    }
  }

  std::int64_t max_k() const { return static_cast<std::int64_t>(s_.size()) - 1; }
  double s(std::int64_t k) const { return s_[k]; }
  double s_prime(std::int64_t k) const { return sp_[k]; }
  double sum_s(const Interval& iv) const { return iv.empty() ? 0.0 : s_[iv.hi] - s_[iv.lo - 1]; }
  double sum_s_prime(const Interval& iv) const {
    return iv.empty() ? 0.0 : sp_[iv.hi] - sp_[iv.lo - 1];
  }
  double sum_s(const KSet& ks) const {
    double v = 0.0;
    for (int p = 0; p < ks.count; ++p) v += sum_s(ks.parts[p]);
    return v;
  }
  double sum_s_prime(const KSet& ks) const {
    double v = 0.0;
    for (int p = 0; p < ks.count; ++p) v += sum_s_prime(ks.parts[p]);
    return v;
  }

 private:
  std::vector<double> s_;
  std::vector<double> sp_;
};

/// z-coordinate at an iteration whose product theta theta equals `pair`, given
/// the state recorded at the last touch (gsum at k_j with product `pair_kj`):
///   soft(z0 - eta gsum - eta (pair - pair_kj) grad~, eta pair l1) / (1 + eta pair l2)
inline double lazy_z(double z0, double gsum_kj, double grad_tilde, double eta, double l1, double l2,
                     double pair, double pair_kj) {
  const double tau = eta * pair;
  const double shrink = 1.0 / (1.0 + tau * l2);
  return shrink * soft(z0 - eta * gsum_kj - eta * (pair - pair_kj) * grad_tilde, tau * l1);
}

/// Per-coordinate quantities needed to replay skipped iterations.
struct CoordContext {
  double z0 = 0.0;
  double gsum_kj = 0.0;
  double grad_tilde = 0.0;
  std::int64_t kj = 0;
};

/// x_{k-1, j} reconstructed from x_{k_j, j}:
///   (pair_kj / pair_{k}) x_{k_j} + (1/pair_{k}) sum_{k' in K+ u K-} theta_{k'-2} z_{k'-1}
/// with pair_{k} = theta_{k-1} theta_{k-2}; each K-sum is two table lookups.
inline double lazy_x(double x_kj, const CoordContext& c, std::int64_t k, const KSets& ks,
                     const PrefixTables& tables, double eta, double l1) {
  if (k <= c.kj + 1) return x_kj;
  const double pair_k = inner_theta_pair(k - 1);
  const double pair_kj = inner_theta_pair(c.kj);
  const double c3 = eta * c.gsum_kj - eta * pair_kj * c.grad_tilde;
  const double base = c.z0 - c3;
  double acc = 0.0;
  if (!ks.plus.empty())
    acc += base * tables.sum_s(ks.plus) - eta * (c.grad_tilde + l1) * tables.sum_s_prime(ks.plus);
  if (!ks.minus.empty())
    acc += base * tables.sum_s(ks.minus) - eta * (c.grad_tilde - l1) * tables.sum_s_prime(ks.minus);
  return (pair_kj / pair_k) * x_kj + acc / pair_k;
}

/// Convenience wrapper computing the K-sets for coordinate context `c`.
inline KSets k_sets_for(const CoordContext& c, std::int64_t k, double eta, double l1) {
  const double c1 = eta * c.grad_tilde / 4.0;
  const double c2 = eta * l1 / 4.0;
  const double c3 = eta * c.gsum_kj - eta * inner_theta_pair(c.kj) * c.grad_tilde;
  return compute_k_sets(c1, c2, c3, c.z0, c.kj, k);
}

struct LazyStats {
  std::uint64_t touched = 0;      // sum_k |A_k|
  std::uint64_t final_sweep = 0;  // coordinates caught up at k = m
  std::size_t max_active = 0;     // max_k |A_k|
};

/// Lazy engine for one accelerated SVRDA stage. Drive it with step() m times
/// and call finish() for the fully materialized (x_m, z_m).
class AccSvrdaStage {
 public:
  AccSvrdaStage(const Problem& p, const VarianceReducedGradient& est, std::span<const double> y0,
                double eta, std::size_t m)
      : p_(&p),
        est_(&est),
        eta_(eta),
        m_(static_cast<std::int64_t>(m)),
        tables_(eta, p.elastic_net() ? p.elastic_net()->l2 : 0.0, static_cast<std::int64_t>(m) + 1),
        z0_(y0.begin(), y0.end()),
        x_(y0.begin(), y0.end()),
        z_(y0.begin(), y0.end()),
        y_(p.d(), 0.0),
        gsum_(p.d(), 0.0),
        scratch_(p.d(), 0.0),
        kj_(p.d(), 0),
        mark_(p.d(), -1) {
    if (!p.elastic_net()) throw Error("lazy path requires linear loss + elastic net");
    ::erm::detail::require(m >= 1, "inner length must be positive");
    l1_ = p.elastic_net()->l1;
    l2_ = p.elastic_net()->l2;
  }

  std::int64_t iteration() const { return k_; }
  const LazyStats& stats() const { return stats_; }

  /// Iteration k_ + 1 with the given batch.
  void step(const SamplingScheme& scheme, std::span<const std::size_t> batch) {
    const std::int64_t k = ++k_;
    ::erm::detail::require(k <= m_, "lazy stage stepped past its length");
    const Dataset& a = p_->data();
    const auto grad = est_->anchor_gradient();

    active_.clear();
    for (std::size_t i : batch) {
      for (Index j : a.row(i).index) {
        if (mark_[j] != k) {
          mark_[j] = k;
          active_.push_back(j);
        }
      }
    }
    stats_.touched += active_.size();
    stats_.max_active = std::max(stats_.max_active, active_.size());

    // Bring x_{k-1} and y_k up to date on the active set.
    const double theta = inner_theta(k);
    const double w_old = 1.0 - 1.0 / theta, w_new = 1.0 / theta;
    for (Index j : active_) {
      if (k == 1) {
        y_[j] = x_[j];
        continue;
      }
      const CoordContext c = context(j);
      const double x_prev = catch_up_x(j, c, k);
      const double z_prev = lazy_z(c.z0, c.gsum_kj, c.grad_tilde, eta_, l1_, l2_,
                                   inner_theta_pair(k - 1), inner_theta_pair(c.kj));
      x_[j] = x_prev;
      y_[j] = w_old * x_prev + w_new * z_prev;
    }

    coef_.resize(batch.size());
    est_->batch_coefficients(scheme, batch, y_, coef_);
    for (Index j : active_) scratch_[j] = 0.0;
    for (std::size_t l = 0; l < batch.size(); ++l) a.row(batch[l]).axpy(coef_[l], scratch_);

    const double theta_prev = inner_theta(k - 1);
    const double pair = inner_theta_pair(k);
    const double tau = eta_ * pair;
    const double shrink = 1.0 / (1.0 + tau * l2_);
    for (Index j : active_) {
      const double g = grad[j] + scratch_[j];
      gsum_[j] += theta_prev * g + (inner_theta_pair(k - 1) - inner_theta_pair(kj_[j])) * grad[j];
      z_[j] = shrink * soft(z0_[j] - eta_ * gsum_[j], tau * l1_);
      x_[j] = w_old * x_[j] + w_new * z_[j];
      kj_[j] = k;
    }
  }

  /// (x_k, z_k) and the dual sum sum_{k'<=k} theta_{k'-1} g_{k'} at the current
  /// iteration, without changing state. O(d).
  void materialize(std::span<double> x, std::span<double> z, std::span<double> gsum = {}) const {
    const auto grad = est_->anchor_gradient();
    const std::int64_t k = k_;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (kj_[j] == k) {
        x[j] = x_[j];
        z[j] = z_[j];
        if (!gsum.empty()) gsum[j] = gsum_[j];
        continue;
      }
      const CoordContext c = context(j);
      x[j] = catch_up_x(j, c, k + 1);
      z[j] = lazy_z(c.z0, c.gsum_kj, c.grad_tilde, eta_, l1_, l2_, inner_theta_pair(k),
                    inner_theta_pair(c.kj));
      if (!gsum.empty())
        gsum[j] = c.gsum_kj + (inner_theta_pair(k) - inner_theta_pair(c.kj)) * grad[j];
    }
  }

  /// Catch every coordinate up to k = m and return (x_m, z_m).
  std::pair<Vector, Vector> finish() {
    ::erm::detail::require(k_ == m_, "lazy stage finished early");
    for (std::size_t j = 0; j < kj_.size(); ++j)
      if (kj_[j] != k_) ++stats_.final_sweep;
    Vector x(x_.size()), z(z_.size());
    materialize(x, z);
    return {std::move(x), std::move(z)};
  }

 private:
  CoordContext context(std::size_t j) const {
    return {z0_[j], gsum_[j], est_->anchor_gradient()[j], kj_[j]};
  }

  /// x_{target-1, j} from the state stored at k_j.
  double catch_up_x(std::size_t j, const CoordContext& c, std::int64_t target) const {
    if (target <= c.kj + 1) return x_[j];
    const KSets ks = k_sets_for(c, target, eta_, l1_);
    return lazy_x(x_[j], c, target, ks, tables_, eta_, l1_);
  }

  const Problem* p_;
  const VarianceReducedGradient* est_;
  double eta_;
  double l1_ = 0.0, l2_ = 0.0;
  std::int64_t m_;
  std::int64_t k_ = 0;
  PrefixTables tables_;
  Vector z0_, x_, z_, y_, gsum_, scratch_;
  std::vector<std::int64_t> kj_;
  std::vector<std::int64_t> mark_;
  std::vector<Index> active_;
  std::vector<double> coef_;
  LazyStats stats_;
};

}  // namespace erm::lazy
