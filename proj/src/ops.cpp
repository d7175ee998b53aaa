#include "infoplane/ops.hpp"

#include <cmath>
#include <string>

namespace infoplane {
namespace {

struct BroadcastShape {
  Eigen::Index rows;
  Eigen::Index cols;
};

BroadcastShape broadcast_shape(std::string_view op, const Matrix& a, const Matrix& b) {
  auto dim = [&](Eigen::Index x, Eigen::Index y) {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(a) + " with " +
                         shape_string(b));
  };
  return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

template <typename Forward, typename Backward>
Tensor unary(std::string_view op, const Tensor& a, Forward&& f, Backward&& df) {
  Tape& tape = a.tape();
  Matrix out = f(a.value());
  const NodeId in = a.node();
  const NodeId self = tape.size();
  return tape.record(op, std::move(out), {a},
                     [&tape, in, self, df](const Matrix& g, Gradients& grads) {
                       grads.accumulate(in, df(g, tape.value(in), tape.value(self)));
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const auto [r, c] = broadcast_shape("add", a.value(), b.value());
  const NodeId ia = a.node(), ib = b.node();
  const auto ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  Matrix out = expand(a.value(), r, c) + expand(b.value(), r, c);
  return a.tape().record("add", std::move(out), {a, b}, [=](const Matrix& g, Gradients& grads) {
    grads.accumulate(ia, reduce_to(g, ar, ac));
    grads.accumulate(ib, reduce_to(g, br, bc));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto [r, c] = broadcast_shape("sub", a.value(), b.value());
  const NodeId ia = a.node(), ib = b.node();
  const auto ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  Matrix out = expand(a.value(), r, c) - expand(b.value(), r, c);
  return a.tape().record("sub", std::move(out), {a, b}, [=](const Matrix& g, Gradients& grads) {
    grads.accumulate(ia, reduce_to(g, ar, ac));
    grads.accumulate(ib, reduce_to(-g, br, bc));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto [r, c] = broadcast_shape("mul", a.value(), b.value());
  Tape& tape = a.tape();
  const NodeId ia = a.node(), ib = b.node();
  Matrix out = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  return tape.record("mul", std::move(out), {a, b}, [&tape, ia, ib, r, c](const Matrix& g, Gradients& grads) {
    const Matrix& av = tape.value(ia);
    const Matrix& bv = tape.value(ib);
    if (tape.requires_grad(ia))
      grads.accumulate(ia, reduce_to(g.cwiseProduct(expand(bv, r, c)), av.rows(), av.cols()));
    if (tape.requires_grad(ib))
      grads.accumulate(ib, reduce_to(g.cwiseProduct(expand(av, r, c)), bv.rows(), bv.cols()));
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.value()) + " x " +
                         shape_string(b.value()));
  }
  Tape& tape = a.tape();
  const NodeId ia = a.node(), ib = b.node();
  Matrix out = a.value() * b.value();
  return tape.record("matmul", std::move(out), {a, b}, [&tape, ia, ib](const Matrix& g, Gradients& grads) {
    if (tape.requires_grad(ia)) grads.accumulate(ia, Matrix(g * tape.value(ib).transpose()));
    if (tape.requires_grad(ib)) grads.accumulate(ib, Matrix(tape.value(ia).transpose() * g));
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](const Matrix& x) -> Matrix { return factor * x; },
      [factor](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return factor * g; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](const Matrix& x) -> Matrix { return x.array() + offset; },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](const Matrix& x) -> Matrix { return x.cwiseMax(0.0); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > 0.0).select(g, 0.0);
      });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](const Matrix& x) -> Matrix { return x.array().tanh(); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix {
        return g.array() * (1.0 - y.array().square());
      });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](const Matrix& x) -> Matrix { return x.array().exp(); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix { return g.cwiseProduct(y); });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](const Matrix& x) -> Matrix { return x.array().log(); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix { return g.array() / x.array(); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      "softplus", a,
      [](const Matrix& x) -> Matrix { return x.unaryExpr([](double v) { return softplus(v); }); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        return g.array() * x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }).array();
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](const Matrix& x) -> Matrix { return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix {
        return g.array() * y.array() * (1.0 - y.array());
      });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](const Matrix& x) -> Matrix { return x.array().square(); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix { return 2.0 * g.cwiseProduct(x); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      "clamp", a, [lo, hi](const Matrix& x) -> Matrix { return x.cwiseMax(lo).cwiseMin(hi); },
      [lo, hi](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() >= lo && x.array() <= hi).select(g, 0.0);
      });
}

Tensor sum(const Tensor& a) {
  const auto r = a.rows(), c = a.cols();
  return unary(
      "sum", a, [](const Matrix& x) -> Matrix { return Matrix::Constant(1, 1, x.sum()); },
      [r, c](const Matrix& g, const Matrix&, const Matrix&) -> Matrix {
        return Matrix::Constant(r, c, g(0, 0));
      });
}

Tensor mean(const Tensor& a) {
  const auto r = a.rows(), c = a.cols();
  if (a.size() == 0) throw DimensionError("mean of empty tensor");
  const double n = static_cast<double>(a.size());
  return unary(
      "mean", a, [n](const Matrix& x) -> Matrix { return Matrix::Constant(1, 1, x.sum() / n); },
      [r, c, n](const Matrix& g, const Matrix&, const Matrix&) -> Matrix {
        return Matrix::Constant(r, c, g(0, 0) / n);
      });
}

Tensor row_sum(const Tensor& a) {
  const auto c = a.cols();
  return unary(
      "row_sum", a, [](const Matrix& x) -> Matrix { return x.rowwise().sum(); },
      [c](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g.replicate(1, c); });
}

Tensor log_softmax(const Tensor& a) {
  return unary(
      "log_softmax", a,
      [](const Matrix& x) -> Matrix {
        const Vector m = x.rowwise().maxCoeff();
        Matrix shifted = x.colwise() - m;
        const Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
        shifted.colwise() -= lse;
        return shifted;
      },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix {
        const Vector gsum = g.rowwise().sum();
        Matrix soft = y.array().exp();
        soft.array().colwise() *= gsum.array();
        return g - soft;
      });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " +
                         shape_string(a.value()));
  }
  const auto r = a.rows(), c = a.cols();
  return unary(
      "slice_cols", a, [start, count](const Matrix& x) -> Matrix { return x.middleCols(start, count); },
      [r, c, start, count](const Matrix& g, const Matrix&, const Matrix&) -> Matrix {
        Matrix out = Matrix::Zero(r, c);
        out.middleCols(start, count) = g;
        return out;
      });
}

Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.value()) + " as " +
                         shape_string(rows, cols));
  }
  const auto r = a.rows(), c = a.cols();
  auto row_major = [](const Matrix& x, Eigen::Index nr, Eigen::Index nc) -> Matrix {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor src = x;
    return Eigen::Map<const RowMajor>(src.data(), nr, nc);
  };
  return unary(
      "reshape", a, [=](const Matrix& x) -> Matrix { return row_major(x, rows, cols); },
      [=](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return row_major(g, r, c); });
}

Tensor gather_rows(const Tensor& a, std::span<const Eigen::Index> indices) {
  const auto r = a.rows();
  std::vector<Eigen::Index> idx(indices.begin(), indices.end());
  for (Eigen::Index i : idx) {
    if (i < 0 || i >= r) {
      throw DimensionError("gather_rows: index " + std::to_string(i) + " out of range for " +
                           shape_string(a.value()));
    }
  }
  return unary(
      "gather_rows", a,
      [&idx](const Matrix& x) -> Matrix { return x(idx, Eigen::all); },
      [idx, r](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        Matrix out = Matrix::Zero(r, x.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) out.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        return out;
      });
}

Tensor pick_per_row(const Tensor& a, std::span<const int> columns) {
  if (static_cast<Eigen::Index>(columns.size()) != a.rows()) {
    throw DimensionError("pick_per_row: " + std::to_string(columns.size()) + " column indices for " +
                         shape_string(a.value()));
  }
  std::vector<int> cols(columns.begin(), columns.end());
  for (int c : cols) {
    if (c < 0 || c >= a.cols()) {
      throw DimensionError("pick_per_row: column " + std::to_string(c) + " out of range for " +
                           shape_string(a.value()));
    }
  }
  return unary(
      "pick_per_row", a,
      [&cols](const Matrix& x) -> Matrix {
        Matrix out(x.rows(), 1);
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, 0) = x(i, cols[static_cast<std::size_t>(i)]);
        return out;
      },
      [cols](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        Matrix out = Matrix::Zero(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, cols[static_cast<std::size_t>(i)]) = g(i, 0);
        return out;
      });
}

Tensor stop_gradient(const Tensor& a) { return a.tape().constant(a.value()); }

}  // namespace infoplane
