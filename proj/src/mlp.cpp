#include "infoplane/mlp.hpp"

#include <cmath>

namespace infoplane {
namespace {

Matrix activate(const Matrix& x, Activation a) {
  switch (a) {
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::tanh: return x.array().tanh();
    case Activation::identity: return x;
  }
  return x;
}

Tensor activate(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "relu";
}

Mlp::Mlp(std::span<const Eigen::Index> sizes, Activation hidden, RandomStream& rng, double gain)
    : hidden_(hidden) {
  if (sizes.size() < 2) throw ContractError("Mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const Eigen::Index in = sizes[i], out = sizes[i + 1];
    if (in <= 0 || out <= 0) throw ContractError("Mlp layer sizes must be positive");
    const double limit = gain * std::sqrt(6.0 / static_cast<double>(in + out));
    Dense layer;
    layer.weight = (2.0 * rng.uniform_matrix(in, out).array() - 1.0) * limit;
    layer.bias = Matrix::Zero(1, out);
    layers_.push_back(std::move(layer));
  }
}

std::vector<Eigen::Index> Mlp::sizes() const {
  std::vector<Eigen::Index> s;
  if (layers_.empty()) return s;
  s.push_back(input_dim());
  for (const Dense& l : layers_) s.push_back(l.weight.cols());
  return s;
}

std::vector<Matrix*> Mlp::parameters() {
  std::vector<Matrix*> p;
  for (Dense& l : layers_) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

std::vector<const Matrix*> Mlp::parameters() const {
  std::vector<const Matrix*> p;
  for (const Dense& l : layers_) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Dense& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Matrix Mlp::forward(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw DimensionError("Mlp::forward: input " + shape_string(x) + " but network expects " +
                         std::to_string(input_dim()) + " columns");
  }
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = h * layers_[i].weight;
    z.rowwise() += layers_[i].bias.row(0);
    h = (i + 1 < layers_.size()) ? activate(z, hidden_) : std::move(z);
  }
  return h;
}

BoundMlp::BoundMlp(const Mlp& mlp, Tape& tape, bool trainable) : hidden_(mlp.activation()) {
  for (const Matrix* p : mlp.parameters())
    params_.push_back(trainable ? tape.leaf(*p) : tape.constant(*p));
}

BoundMlp::BoundMlp(const Mlp& mlp, std::span<const Tensor> params)
    : params_(params.begin(), params.end()), hidden_(mlp.activation()) {
  if (params_.size() != 2 * mlp.layers().size())
    throw ContractError("BoundMlp: wrong number of parameter tensors");
}

Tensor BoundMlp::forward(const Tensor& x) const {
  const std::size_t n_layers = params_.size() / 2;
  if (x.cols() != params_[0].rows()) {
    throw DimensionError("BoundMlp::forward: input " + shape_string(x.value()) +
                         " but network expects " + std::to_string(params_[0].rows()) + " columns");
  }
  Tensor h = x;
  for (std::size_t i = 0; i < n_layers; ++i) {
    h = matmul(h, params_[2 * i]) + params_[2 * i + 1];
    if (i + 1 < n_layers) h = activate(h, hidden_);
  }
  return h;
}

}  // namespace infoplane
