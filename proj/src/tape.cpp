#include "infoplane/tape.hpp"

namespace infoplane {

const Matrix& Tensor::value() const { return tape_->value(node_); }

double Tensor::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1)
    throw DimensionError("scalar() on non-scalar tensor of shape " + shape_string(v));
  return v(0, 0);
}

bool Tensor::requires_grad() const { return tape_->requires_grad(node_); }

Tensor Tape::leaf(Matrix value) {
  if (!value.allFinite()) throw NumericError("non-finite value in leaf tensor");
  nodes_.push_back(Node{"leaf", std::move(value), {}, true});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NumericError("non-finite value in constant tensor");
  nodes_.push_back(Node{"constant", std::move(value), {}, false});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Tensor Tape::record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs,
                    BackwardFn backward) {
  const NodeId id = nodes_.size();
  if (!value.allFinite()) {
    throw NumericError("non-finite output from op '" + std::string(op) + "' at node " +
                       std::to_string(id));
  }
  bool needs = false;
  for (const Tensor& in : inputs) {
    if (&in.tape() != this) throw ContractError("op '" + std::string(op) + "' mixes tapes");
    needs = needs || nodes_[in.node()].requires_grad;
  }
  nodes_.push_back(Node{op, std::move(value), needs ? std::move(backward) : BackwardFn{}, needs});
  return Tensor(this, id);
}

Matrix Gradients::operator[](const Tensor& t) const {
  const Matrix& g = slots_[t.node()];
  if (g.size() == 0) return Matrix::Zero(t.rows(), t.cols());
  return g;
}

void Gradients::accumulate(NodeId id, const Matrix& g) {
  if (!tape_->requires_grad(id)) return;
  Matrix& slot = slots_[id];
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

Gradients backward(const Tensor& loss) {
  const Tape& tape = loss.tape();
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_string(loss.value()));
  }
  Gradients grads(tape);
  if (!tape.requires_grad(loss.node())) return grads;
  grads.accumulate(loss.node(), Matrix::Ones(1, 1));
  for (NodeId id = loss.node() + 1; id-- > 0;) {
    const Matrix& g = grads.raw(id);
    if (g.size() == 0) continue;
    const auto& node = tape.nodes_[id];
    if (!node.backward) continue;
    if (!g.allFinite()) {
      throw NumericError("non-finite gradient at node " + std::to_string(id) + " (op '" +
                         std::string(node.op) + "')");
    }
    node.backward(g, grads);
  }
  return grads;
}

}  // namespace infoplane
