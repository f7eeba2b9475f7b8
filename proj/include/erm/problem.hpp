#pragma once

// Composite objective P(x) = (1/n) sum_i psi_i(a_i^T x) + R(x) for linear
// models: losses, elastic-net regularizer, proximal maps and smoothness
// constants.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "erm/dataset.hpp"
#include "erm/error.hpp"

namespace erm {

struct Loss {
  enum class Kind { Squared, Logistic, SmoothedHinge };

  Kind kind = Kind::Squared;
  double nu = 0.0;  // smoothing width, SmoothedHinge only

  static Loss squared() { return {Kind::Squared, 0.0}; }
  static Loss logistic() { return {Kind::Logistic, 0.0}; }
  static Loss smoothed_hinge(double nu) {
    detail::require(nu > 0.0 && std::isfinite(nu), "smoothed hinge width must be positive");
    return {Kind::SmoothedHinge, nu};
  }

  bool is_classification() const { return kind != Kind::Squared; }
};

inline std::string to_string(const Loss& loss) {
  switch (loss.kind) {
    case Loss::Kind::Squared: return "squared";
    case Loss::Kind::Logistic: return "logistic";
    case Loss::Kind::SmoothedHinge: return "smoothed-hinge:" + std::to_string(loss.nu);
  }
  return "?";
}

struct ElasticNet {
  double l1 = 0.0;
  double l2 = 0.0;

  ElasticNet() = default;
  ElasticNet(double l1_weight, double l2_weight) : l1(l1_weight), l2(l2_weight) {
    detail::require(l1 >= 0.0 && l2 >= 0.0 && std::isfinite(l1) && std::isfinite(l2),
                    "elastic-net weights must be nonnegative");
  }

  double value(std::span<const double> x) const {
    double a = 0.0, q = 0.0;
    for (double v : x) {
      a += std::abs(v);
      q += v * v;
    }
    return l1 * a + 0.5 * l2 * q;
  }
};

/// Arbitrary prox-friendly regularizer for the dense solvers.
struct CustomRegularizer {
  std::function<double(std::span<const double>)> value;
  /// out = prox_{tau R}(z)
  std::function<void(std::span<const double> z, double tau, std::span<double> out)> prox;
};

/// sign(z) max(|z| - lambda, 0)
inline double soft(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

// ---------------------------------------------------------------------------
// Scalar losses. `t` is the linear prediction a_i^T x, `label` is b_i.
// SmoothedHinge works on z = b t:
//   psi(z) = 0                 z >= 1
//          = 1 - z - nu/2      z <= 1 - nu
//          = (1 - z)^2/(2 nu)  otherwise

inline double loss_value(const Loss& loss, double t, double label) {
  if (!std::isfinite(t) || !std::isfinite(label)) throw Error("non-finite margin");
  switch (loss.kind) {
    case Loss::Kind::Squared: {
      const double r = t - label;
      return 0.5 * r * r;
    }
    case Loss::Kind::Logistic: {
      const double u = -label * t;  // log(1 + e^u)
      return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
    }
    case Loss::Kind::SmoothedHinge: {
      const double z = label * t;
      if (z >= 1.0) return 0.0;
      if (z <= 1.0 - loss.nu) return 1.0 - z - 0.5 * loss.nu;
      return (1.0 - z) * (1.0 - z) / (2.0 * loss.nu);
    }
  }
  return 0.0;
}

/// d psi / dt at t.
inline double loss_derivative(const Loss& loss, double t, double label) {
  if (!std::isfinite(t) || !std::isfinite(label)) throw Error("non-finite margin");
  switch (loss.kind) {
    case Loss::Kind::Squared: return t - label;
    case Loss::Kind::Logistic: {
      // -b / (1 + e^{b t}), evaluated without overflow
      const double u = label * t;
      if (u >= 0.0) {
        const double e = std::exp(-u);
        return -label * e / (1.0 + e);
      }
      return -label / (1.0 + std::exp(u));
    }
    case Loss::Kind::SmoothedHinge: {
      const double z = label * t;
      if (z >= 1.0) return 0.0;
      if (z <= 1.0 - loss.nu) return -label;
      return -label * (1.0 - z) / loss.nu;
    }
  }
  return 0.0;
}

/// Lipschitz constant of the gradient of psi(a^T x): ||a||^2 times the
/// curvature bound of psi (1, 1/4, 1/nu).
inline double smoothness_constant(const Loss& loss, const SparseRow& row) {
  const double sq = row.squared_norm();
  switch (loss.kind) {
    case Loss::Kind::Squared: return sq;
    case Loss::Kind::Logistic: return 0.25 * sq;
    case Loss::Kind::SmoothedHinge: return sq / loss.nu;
  }
  return sq;
}

/// Smoothness assigned to rows without nonzeros.
inline constexpr double kEmptyRowSmoothness = 1e-12;

class Problem {
 public:
  Problem(Dataset data, Loss loss, ElasticNet reg)
      : data_(std::make_shared<const Dataset>(std::move(data))), loss_(loss), elastic_(reg) {
    init();
  }

  Problem(Dataset data, Loss loss, CustomRegularizer reg)
      : data_(std::make_shared<const Dataset>(std::move(data))), loss_(loss), custom_(std::move(reg)) {
    detail::require(static_cast<bool>(custom_->value) && static_cast<bool>(custom_->prox),
                    "custom regularizer needs value and prox");
    init();
  }

  Problem(std::shared_ptr<const Dataset> data, Loss loss, ElasticNet reg)
      : data_(std::move(data)), loss_(loss), elastic_(reg) {
    init();
  }

  const Dataset& data() const { return *data_; }
  std::shared_ptr<const Dataset> shared_data() const { return data_; }
  const Loss& loss() const { return loss_; }
  std::size_t n() const { return data_->rows(); }
  std::size_t d() const { return data_->cols(); }

  /// nullptr when a custom regularizer is in use.
  const ElasticNet* elastic_net() const { return elastic_ ? &*elastic_ : nullptr; }

  std::span<const double> smoothness() const { return smoothness_; }
  double mean_smoothness() const { return mean_smoothness_; }
  double max_smoothness() const { return max_smoothness_; }

  double value(std::size_t i, double t) const { return loss_value(loss_, t, data_->label(i)); }
  double derivative(std::size_t i, double t) const {
    return loss_derivative(loss_, t, data_->label(i));
  }

  double regularizer(std::span<const double> x) const {
    return elastic_ ? elastic_->value(x) : custom_->value(x);
  }

  /// out = prox_{tau R}(z); out may alias z.
  void prox(std::span<const double> z, double tau, std::span<double> out) const {
    if (elastic_) {
      const double thr = tau * elastic_->l1;
      const double shrink = 1.0 / (1.0 + tau * elastic_->l2);
      for (std::size_t j = 0; j < z.size(); ++j) out[j] = shrink * soft(z[j], thr);
    } else {
      custom_->prox(z, tau, out);
    }
  }

 private:
  void init() {
    const Dataset& a = *data_;
    if (loss_.is_classification()) {
      for (std::size_t i = 0; i < a.rows(); ++i)
        detail::require(a.label(i) == 1.0 || a.label(i) == -1.0,
                        "classification losses need labels in {-1, +1}");
    }
    smoothness_.resize(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double li = smoothness_constant(loss_, a.row(i));
      smoothness_[i] = li > 0.0 ? li : kEmptyRowSmoothness;
    }
    mean_smoothness_ =
        std::accumulate(smoothness_.begin(), smoothness_.end(), 0.0) / static_cast<double>(a.rows());
    max_smoothness_ = *std::max_element(smoothness_.begin(), smoothness_.end());
  }

  std::shared_ptr<const Dataset> data_;
  Loss loss_;
  std::optional<ElasticNet> elastic_;
  std::optional<CustomRegularizer> custom_;
  Vector smoothness_;
  double mean_smoothness_ = 0.0;
  double max_smoothness_ = 0.0;
};

namespace detail {

inline void require_dim(const Problem& p, std::span<const double> x) {
  if (x.size() != p.d())
    throw Error("dimension mismatch: expected " + std::to_string(p.d()) + ", got " +
                std::to_string(x.size()));
}

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

/// grad = (1/n) sum_i psi_i'(a_i^T x) a_i. Rows are reduced in index order so
/// the result is deterministic. If `derivs` is non-empty it receives psi_i'.
inline void full_gradient(const Problem& p, std::span<const double> x, std::span<double> grad,
                          std::span<double> derivs = {}) {
  detail::require_dim(p, x);
  detail::require(grad.size() == p.d(), "gradient buffer has wrong length");
  std::fill(grad.begin(), grad.end(), 0.0);
  const Dataset& a = p.data();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const SparseRow row = a.row(i);
    const double g = p.derivative(i, row.dot(x));
    if (!derivs.empty()) derivs[i] = g;
    row.axpy(g, grad);
  }
  const double inv_n = 1.0 / static_cast<double>(a.rows());
  for (double& v : grad) v *= inv_n;
}

inline Vector full_gradient(const Problem& p, std::span<const double> x) {
  Vector g(p.d());
  full_gradient(p, x, g);
  return g;
}

/// F(x) alone.
inline double smooth_part(const Problem& p, std::span<const double> x) {
  detail::require_dim(p, x);
  const Dataset& a = p.data();
  detail::CompensatedSum sum;
  for (std::size_t i = 0; i < a.rows(); ++i) sum.add(p.value(i, a.row(i).dot(x)));
  return sum.value() / static_cast<double>(a.rows());
}

/// P(x) = F(x) + R(x).
inline double objective(const Problem& p, std::span<const double> x) {
  return smooth_part(p, x) + p.regularizer(x);
}

/// prox_{scale R}(z) for R = l1 |x|_1 + (l2/2)|x|^2:
/// coordinate-wise sign(z) max(|z| - scale l1, 0) / (1 + scale l2).
inline Vector prox_elastic_net(std::span<const double> z, double scale, const ElasticNet& reg) {
  detail::require(scale > 0.0, "prox scale must be positive");
  Vector out(z.size());
  const double thr = scale * reg.l1;
  const double shrink = 1.0 / (1.0 + scale * reg.l2);
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = shrink * soft(z[j], thr);
  return out;
}

}  // namespace erm
