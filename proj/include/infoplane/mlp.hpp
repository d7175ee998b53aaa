#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "infoplane/ops.hpp"
#include "infoplane/random.hpp"

namespace infoplane {

enum class Activation { relu, tanh, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Affine layer y = x W + b with W stored fan_in x fan_out.
struct Dense {
  Matrix weight;
  Matrix bias;  // 1 x fan_out
};

/// Fully connected stack; `hidden` activation after every layer but the last.
class Mlp {
 public:
  Mlp() = default;
  /// Xavier-uniform weights scaled by `gain`, zero biases.
  Mlp(std::span<const Eigen::Index> sizes, Activation hidden, RandomStream& rng, double gain = 1.0);

  Eigen::Index input_dim() const { return layers_.front().weight.rows(); }
  Eigen::Index output_dim() const { return layers_.back().weight.cols(); }
  Activation activation() const { return hidden_; }
  std::vector<Eigen::Index> sizes() const;

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

  /// Weight/bias pointers in layer order (w0, b0, w1, b1, ...).
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::size_t parameter_count() const;

  /// Plain evaluation without a tape.
  Matrix forward(const Matrix& x) const;

 private:
  std::vector<Dense> layers_;
  Activation hidden_ = Activation::relu;
};

/// Mlp parameters bound onto a tape, either as leaves or constants.
class BoundMlp {
 public:
  BoundMlp(const Mlp& mlp, Tape& tape, bool trainable);
  /// Binds to tensors already on the tape (e.g. leaves made by grad_check).
  BoundMlp(const Mlp& mlp, std::span<const Tensor> params);

  Tensor forward(const Tensor& x) const;
  const std::vector<Tensor>& parameters() const { return params_; }

 private:
  std::vector<Tensor> params_;
  Activation hidden_;
};

}  // namespace infoplane
