#pragma once

#include <functional>
#include <span>
#include <vector>

#include "infoplane/tape.hpp"

namespace infoplane {

/// Scalar loss built on a fresh tape from leaves bound to the current values.
using ParamLossFn = std::function<Tensor(Tape&, std::span<const Tensor>)>;

/// Max over coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|),
/// with central differences of width `step`. Parameters are restored on return.
double grad_check(std::span<Matrix* const> params, const ParamLossFn& loss, double step);

/// Single-point form: `f` maps a leaf at `point` to a scalar.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Matrix& point, double step);

}  // namespace infoplane
