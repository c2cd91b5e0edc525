#include "vaelab/gradcheck.hpp"

#include <stdexcept>

namespace vaelab {

Vector finite_diff_grad(const LossFn& loss_fn, const Vector& params, double eps) {
  if (eps <= 0.0) throw std::domain_error("finite_diff_grad: eps must be > 0");
  Vector grad(params.size());
  Vector p = params;
  for (Index i = 0; i < params.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + eps;
    const double up = loss_fn(p);
    p[i] = saved - eps;
    const double down = loss_fn(p);
    p[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace vaelab
