#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "infoplane/types.hpp"

namespace infoplane {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moment buffers. Moments stay empty for SGD.
struct OptimizerState {
  OptimizerConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step_count = 0;

  OptimizerState() = default;
  OptimizerState(const OptimizerConfig& cfg, std::span<Matrix* const> params);
};

/// One update: SGD `p -= lr * g`, or bias-corrected Adam.
///
/// Throws DimensionError when shapes disagree with the state and NumericError
/// for a non-finite gradient; parameters are untouched on error.
void optimizer_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                    OptimizerState& state);

}  // namespace infoplane
