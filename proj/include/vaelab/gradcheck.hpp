#pragma once

#include "vaelab/types.hpp"

#include <functional>

namespace vaelab {

using LossFn = std::function<double(const Vector&)>;

// Central finite differences, (f(p+eps) - f(p-eps)) / (2 eps) per
// coordinate. The numeric oracle the analytic gradients are tested
// against; loss_fn must be deterministic.
Vector finite_diff_grad(const LossFn& loss_fn, const Vector& params,
                        double eps = 1e-5);

}  // namespace vaelab
