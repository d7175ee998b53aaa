#include "infoplane/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace infoplane {
namespace {

double evaluate(std::span<Matrix* const> params, const ParamLossFn& loss) {
  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(params.size());
  for (const Matrix* p : params) leaves.push_back(tape.leaf(*p));
  return loss(tape, leaves).scalar();
}

}  // namespace

double grad_check(std::span<Matrix* const> params, const ParamLossFn& loss, double step) {
  if (!(step > 0.0)) throw ContractError("grad_check: step must be positive");
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    for (const Matrix* p : params) leaves.push_back(tape.leaf(*p));
    const Gradients grads = backward(loss(tape, leaves));
    for (const Tensor& leaf : leaves) analytic.push_back(grads[leaf]);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p(i);
      p(i) = saved + step;
      const double up = evaluate(params, loss);
      p(i) = saved - step;
      const double down = evaluate(params, loss);
      p(i) = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k](i);
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Matrix& point, double step) {
  Matrix x = point;
  Matrix* params[] = {&x};
  return grad_check(params, [&f](Tape&, std::span<const Tensor> leaves) { return f(leaves[0]); },
                    step);
}

}  // namespace infoplane
