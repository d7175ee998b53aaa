#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "infoplane/types.hpp"

namespace infoplane {

using NodeId = std::size_t;

class Tape;
class Gradients;

/// Handle to a value recorded on a Tape.
///
/// A Tensor is a (tape, node) pair; the value itself lives in the tape. All
/// values are 2-D: a batch is rows x features, a vector is 1 x n and a scalar
/// is 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, NodeId node) : tape_(tape), node_(node) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Eigen::Index size() const { return value().size(); }
  /// Value of a 1 x 1 tensor.
  double scalar() const;
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  NodeId node() const { return node_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

/// Propagates the gradient of one node into its inputs' gradient slots.
using BackwardFn = std::function<void(const Matrix& out_grad, Gradients& grads)>;

/// Ordered record of a forward computation.
///
/// Nodes are appended in evaluation order, so inputs always precede their
/// consumers and a single reverse sweep visits each node once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (a parameter or a point being checked).
  Tensor leaf(Matrix value);
  /// Input that never receives a gradient.
  Tensor constant(Matrix value);
  Tensor constant(double value);

  /// Appends an op node. Throws NumericError if `value` is not finite.
  Tensor record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs,
                BackwardFn backward);

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  std::string_view op(NodeId id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

 private:
  friend Gradients backward(const Tensor& loss);

  struct Node {
    std::string_view op;
    Matrix value;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

/// Gradient slots indexed by node id, filled by backward().
class Gradients {
 public:
  explicit Gradients(const Tape& tape) : tape_(&tape), slots_(tape.size()) {}

  /// Gradient for `t`; zeros of the value's shape if nothing flowed into it.
  Matrix operator[](const Tensor& t) const;
  bool has(const Tensor& t) const { return slots_[t.node()].size() != 0; }

  /// Adds `g` into node `id`'s slot. No-op for nodes that do not require grad.
  void accumulate(NodeId id, const Matrix& g);
  template <typename Derived>
  void accumulate(NodeId id, const Eigen::MatrixBase<Derived>& g) {
    if (!tape_->requires_grad(id)) return;
    accumulate(id, Matrix(g));
  }
  void accumulate(const Tensor& t, const Matrix& g) { accumulate(t.node(), g); }

  const Matrix& raw(NodeId id) const { return slots_[id]; }

 private:
  const Tape* tape_;
  std::vector<Matrix> slots_;
};

/// Reverse sweep from a scalar loss. Fan-out gradients are summed.
Gradients backward(const Tensor& loss);

}  // namespace infoplane
