#pragma once

#include <cmath>
#include <numbers>

#include "infoplane/ops.hpp"

namespace infoplane {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)
inline constexpr double kBernoulliClamp = 1e-7;

/// Diagonal Gaussian parameterized by mean and log-variance.
template <typename Scalar>
struct DiagGaussian {
  VectorX<Scalar> mean;
  VectorX<Scalar> log_var;

  DiagGaussian() = default;
  DiagGaussian(VectorX<Scalar> m, VectorX<Scalar> lv) : mean(std::move(m)), log_var(std::move(lv)) {
    if (mean.size() != log_var.size()) {
      throw DimensionError("DiagGaussian: mean has " + std::to_string(mean.size()) +
                           " entries, log-variance " + std::to_string(log_var.size()));
    }
  }

  static DiagGaussian standard(Eigen::Index dim) {
    return {VectorX<Scalar>::Zero(dim), VectorX<Scalar>::Zero(dim)};
  }

  Eigen::Index dim() const { return mean.size(); }
  VectorX<Scalar> variance() const { return log_var.array().exp(); }
};

using DiagGaussiand = DiagGaussian<double>;

namespace detail {
inline void require_dim(const char* op, Eigen::Index expected, Eigen::Index got) {
  if (expected != got) {
    throw DimensionError(std::string(op) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}
}  // namespace detail

template <typename Scalar, typename Derived>
Scalar gauss_log_prob(const DiagGaussian<Scalar>& dist, const Eigen::MatrixBase<Derived>& x) {
  detail::require_dim("gauss_log_prob", dist.dim(), x.size());
  const auto diff = (x.derived().reshaped() - dist.mean).array();
  return (-Scalar(kHalfLog2Pi) - Scalar(0.5) * dist.log_var.array() -
          Scalar(0.5) * diff.square() * (-dist.log_var.array()).exp())
      .sum();
}

template <typename Scalar>
Scalar gauss_entropy(const DiagGaussian<Scalar>& dist) {
  return (Scalar(0.5) * (Scalar(1) + Scalar(2 * kHalfLog2Pi) + dist.log_var.array())).sum();
}

/// KL(p || q) in closed form.
template <typename Scalar>
Scalar gauss_kl(const DiagGaussian<Scalar>& p, const DiagGaussian<Scalar>& q) {
  detail::require_dim("gauss_kl", p.dim(), q.dim());
  const auto dlv = (p.log_var - q.log_var).array();
  const auto diff = (p.mean - q.mean).array();
  return (Scalar(0.5) *
          (dlv.exp() + diff.square() * (-q.log_var.array()).exp() - Scalar(1) - dlv))
      .sum();
}

/// Reparameterized draw mean + exp(log_var / 2) * noise.
template <typename Scalar, typename Derived>
VectorX<Scalar> gauss_sample(const DiagGaussian<Scalar>& dist, const Eigen::MatrixBase<Derived>& noise) {
  detail::require_dim("gauss_sample", dist.dim(), noise.size());
  return dist.mean.array() + (Scalar(0.5) * dist.log_var.array()).exp() * noise.derived().reshaped().array();
}

/// Categorical over K classes stored as normalized log-probabilities.
template <typename Scalar>
struct Categorical {
  VectorX<Scalar> log_probs;

  static Categorical from_logits(const VectorX<Scalar>& logits) {
    const Scalar m = logits.maxCoeff();
    const Scalar lse = m + std::log((logits.array() - m).exp().sum());
    return {logits.array() - lse};
  }

  Eigen::Index classes() const { return log_probs.size(); }
};

using Categoricald = Categorical<double>;

template <typename Scalar>
Scalar categorical_log_prob(const Categorical<Scalar>& dist, int label) {
  if (label < 0 || label >= dist.classes()) {
    throw DimensionError("categorical_log_prob: label " + std::to_string(label) + " outside [0, " +
                         std::to_string(dist.classes()) + ")");
  }
  return dist.log_probs(label);
}

/// Sum of per-pixel Bernoulli log-likelihoods; probabilities are clamped to
/// [1e-7, 1 - 1e-7].
template <typename DerivedP, typename DerivedX>
typename DerivedP::Scalar bernoulli_log_prob(const Eigen::MatrixBase<DerivedP>& probs,
                                             const Eigen::MatrixBase<DerivedX>& x) {
  using Scalar = typename DerivedP::Scalar;
  detail::require_dim("bernoulli_log_prob", probs.size(), x.size());
  const auto p = probs.derived().reshaped().array().max(Scalar(kBernoulliClamp)).min(Scalar(1 - kBernoulliClamp));
  const auto xv = x.derived().reshaped().array();
  return (xv * p.log() + (Scalar(1) - xv) * (Scalar(1) - p).log()).sum();
}

// Batched, differentiable forms. Each row is one distribution; results are
// rows x 1.

/// Per-row log N(x | mean, exp(log_var)).
Tensor gauss_log_prob(const Tensor& mean, const Tensor& log_var, const Tensor& x);
/// Per-row entropy of N(., exp(log_var)).
Tensor gauss_entropy(const Tensor& log_var);
/// Per-row KL(N(mean, exp(log_var)) || N(0, I)).
Tensor gauss_kl_standard(const Tensor& mean, const Tensor& log_var);
/// Per-row KL(p || q) between diagonal Gaussians.
Tensor gauss_kl(const Tensor& p_mean, const Tensor& p_log_var, const Tensor& q_mean,
                const Tensor& q_log_var);
Tensor gauss_sample(const Tensor& mean, const Tensor& log_var, const Tensor& noise);
/// Per-row Bernoulli log-likelihood from logits, with the logits clamped so
/// that probabilities stay inside [1e-7, 1 - 1e-7].
Tensor bernoulli_log_prob_logits(const Tensor& logits, const Tensor& x);

}  // namespace infoplane
