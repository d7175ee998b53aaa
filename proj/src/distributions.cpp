#include "infoplane/distributions.hpp"

namespace infoplane {

Tensor gauss_log_prob(const Tensor& mean, const Tensor& log_var, const Tensor& x) {
  const Tensor diff = x - mean;
  const Tensor mahalanobis = square(diff) * exp(neg(log_var));
  const Tensor per_dim = add_scalar(scale(log_var + mahalanobis, -0.5), -kHalfLog2Pi);
  return row_sum(per_dim);
}

Tensor gauss_entropy(const Tensor& log_var) {
  return row_sum(add_scalar(scale(log_var, 0.5), 0.5 + kHalfLog2Pi));
}

Tensor gauss_kl_standard(const Tensor& mean, const Tensor& log_var) {
  return row_sum(scale(add_scalar(exp(log_var) + square(mean) - log_var, -1.0), 0.5));
}

Tensor gauss_kl(const Tensor& p_mean, const Tensor& p_log_var, const Tensor& q_mean,
                const Tensor& q_log_var) {
  const Tensor dlv = p_log_var - q_log_var;
  const Tensor quad = square(p_mean - q_mean) * exp(neg(q_log_var));
  return row_sum(scale(add_scalar(exp(dlv) + quad - dlv, -1.0), 0.5));
}

Tensor gauss_sample(const Tensor& mean, const Tensor& log_var, const Tensor& noise) {
  // A single-row mean / log-variance is shared by every noise row.
  const bool rows_ok = noise.rows() == mean.rows() || (mean.rows() == 1 && log_var.rows() == 1);
  if (!rows_ok || noise.cols() != mean.cols() || log_var.cols() != mean.cols()) {
    throw DimensionError("gauss_sample: noise " + shape_string(noise.value()) + " vs mean " +
                         shape_string(mean.value()));
  }
  return mean + exp(scale(log_var, 0.5)) * noise;
}

Tensor bernoulli_log_prob_logits(const Tensor& logits, const Tensor& x) {
  if (logits.rows() != x.rows() || logits.cols() != x.cols()) {
    throw DimensionError("bernoulli_log_prob: logits " + shape_string(logits.value()) + " vs x " +
                         shape_string(x.value()));
  }
  static const double bound = std::log((1.0 - kBernoulliClamp) / kBernoulliClamp);
  const Tensor l = clamp(logits, -bound, bound);
  // x log s(l) + (1 - x) log(1 - s(l)) = x l - softplus(l)
  return row_sum(x * l - softplus(l));
}

}  // namespace infoplane
