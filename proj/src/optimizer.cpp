#include "infoplane/optimizer.hpp"

#include <cmath>

namespace infoplane {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

OptimizerState::OptimizerState(const OptimizerConfig& cfg, std::span<Matrix* const> params)
    : config(cfg) {
  if (cfg.kind == OptimizerKind::adam) {
    first_moment.reserve(params.size());
    second_moment.reserve(params.size());
    for (const Matrix* p : params) {
      first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
}

void optimizer_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                    OptimizerState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("optimizer_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  const bool adam = state.config.kind == OptimizerKind::adam;
  if (adam && state.first_moment.size() != params.size()) {
    throw DimensionError("optimizer_step: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols()) {
      throw DimensionError("optimizer_step: parameter " + std::to_string(i) + " has shape " +
                           shape_string(*params[i]) + " but gradient " + shape_string(grads[i]));
    }
    if (adam && (state.first_moment[i].rows() != grads[i].rows() ||
                 state.first_moment[i].cols() != grads[i].cols())) {
      throw DimensionError("optimizer_step: moment " + std::to_string(i) + " has shape " +
                           shape_string(state.first_moment[i]));
    }
    if (!grads[i].allFinite()) {
      throw NumericError("optimizer_step: non-finite gradient for parameter " + std::to_string(i));
    }
  }

  const double lr = state.config.learning_rate;
  ++state.step_count;
  if (!adam) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i];
    return;
  }
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * grads[i];
    v = b2 * v + (1.0 - b2) * grads[i].cwiseAbs2();
    params[i]->array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.config.epsilon);
  }
}

}  // namespace infoplane
