#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "infoplane/tape.hpp"

namespace infoplane {

// Binary elementwise ops broadcast a dimension of size 1 against the other
// operand (bias rows, per-row scalars, 1 x 1 scalars).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor neg(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
/// Clips to [lo, hi]; the gradient is zero where clipping is active.
Tensor clamp(const Tensor& a, double lo, double hi);

/// Sum of all entries, 1 x 1.
Tensor sum(const Tensor& a);
/// Mean of all entries, 1 x 1.
Tensor mean(const Tensor& a);
/// Per-row sum, rows x 1.
Tensor row_sum(const Tensor& a);
/// Numerically stable per-row log-softmax.
Tensor log_softmax(const Tensor& a);

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
/// Row-major reshape.
Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols);
/// Output row i is input row indices[i]; backward scatter-adds.
Tensor gather_rows(const Tensor& a, std::span<const Eigen::Index> indices);
/// Output row i is a(i, columns[i]), rows x 1.
Tensor pick_per_row(const Tensor& a, std::span<const int> columns);
/// Same value, no gradient flows back.
Tensor stop_gradient(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

/// Stable softplus on plain values: log(1 + exp(x)).
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace infoplane
