#pragma once

#include <span>
#include <vector>

#include "erm/problem.hpp"
#include "erm/sampling.hpp"

namespace erm {

/// Variance-reduced gradient estimator anchored at a snapshot x~:
///
///   g(y) = (1/b) sum_{i in I} (1/(n q_i)) (grad f_i(y) - grad f_i(x~)) + grad F(x~)
///
/// Construction costs one full pass (n component gradients) and caches
/// psi_i'(a_i^T x~) for every row, so each batch term only needs a_i^T y.
class VarianceReducedGradient {
 public:
  VarianceReducedGradient(const Problem& problem, std::span<const double> anchor)
      : problem_(&problem), anchor_grad_(problem.d()), anchor_deriv_(problem.n()) {
    full_gradient(problem, anchor, anchor_grad_, anchor_deriv_);
  }

  std::span<const double> anchor_gradient() const { return anchor_grad_; }
  double anchor_derivative(std::size_t i) const { return anchor_deriv_[i]; }

  /// coef[l] = w_i (psi_i'(a_i^T y) - psi_i'(a_i^T x~)) / b for i = batch[l].
  /// `y` only needs to be correct on the support of the sampled rows.
  void batch_coefficients(const SamplingScheme& scheme, std::span<const std::size_t> batch,
                          std::span<const double> y, std::span<double> coef) const {
    const double b = static_cast<double>(batch.size());
    const Dataset& a = problem_->data();
    for (std::size_t l = 0; l < batch.size(); ++l) {
      const std::size_t i = batch[l];
      const double dy = problem_->derivative(i, a.row(i).dot(y));
      coef[l] = scheme.importance_weight(i) * (dy - anchor_deriv_[i]) / b;
    }
  }

  /// Dense estimate written to `out`. `scratch` holds the batch correction.
  void estimate(const SamplingScheme& scheme, std::span<const std::size_t> batch,
                std::span<const double> y, std::span<double> out, std::vector<double>& coef,
                std::vector<double>& scratch) const {
    coef.resize(batch.size());
    batch_coefficients(scheme, batch, y, coef);
    scratch.assign(anchor_grad_.size(), 0.0);
    const Dataset& a = problem_->data();
    for (std::size_t l = 0; l < batch.size(); ++l) a.row(batch[l]).axpy(coef[l], scratch);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = anchor_grad_[j] + scratch[j];
  }

  Vector estimate(const SamplingScheme& scheme, std::span<const std::size_t> batch,
                  std::span<const double> y) const {
    Vector out(anchor_grad_.size());
    std::vector<double> coef, scratch;
    estimate(scheme, batch, y, out, coef, scratch);
    return out;
  }

 private:
  const Problem* problem_;
  Vector anchor_grad_;
  Vector anchor_deriv_;
};

}  // namespace erm
