#include "vaelab/layers.hpp"

#include <cmath>

namespace vaelab {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

DenseLayer make_dense(Index in, Index out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.W.resize(out, in);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (Index r = 0; r < out; ++r)
    for (Index c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-bound, bound);
  layer.b = Vector::Zero(out);
  layer.activation = act;
  return layer;
}

Matrix dense_forward(const DenseLayer& layer, const Eigen::Ref<const Matrix>& x) {
  require_cols(x, layer.in_size(),
               std::string("dense_forward(") + shape_str(layer.W) + " layer)");
  Matrix y = x * layer.W.transpose();
  y.rowwise() += layer.b.transpose();
  switch (layer.activation) {
    case Activation::identity:
      break;
    case Activation::relu:
      y = y.cwiseMax(0.0);
      break;
    case Activation::sigmoid:
      y = ((-y.array()).exp() + 1.0).inverse();
      break;
  }
  return y;
}

DenseBackward dense_backward_from_output(const DenseLayer& layer,
                                         const Eigen::Ref<const Matrix>& x,
                                         const Eigen::Ref<const Matrix>& y,
                                         const Eigen::Ref<const Matrix>& upstream_grad) {
  require_cols(x, layer.in_size(), "dense_backward: input");
  require_cols(upstream_grad, layer.out_size(), "dense_backward: upstream");
  if (x.rows() != upstream_grad.rows()) {
    throw DimensionError("dense_backward: batch mismatch, x " + shape_str(x) +
                         " vs upstream " + shape_str(upstream_grad));
  }

  // dz = upstream .* act'(pre); both relu and sigmoid derivatives can be
  // read off the output itself.
  Matrix dz;
  switch (layer.activation) {
    case Activation::identity:
      dz = upstream_grad;
      break;
    case Activation::relu:
      dz = (y.array() > 0.0).cast<double>() * upstream_grad.array();
      break;
    case Activation::sigmoid:
      dz = y.array() * (1.0 - y.array()) * upstream_grad.array();
      break;
  }

  DenseBackward out;
  out.grad_w.noalias() = dz.transpose() * x;
  out.grad_b = dz.colwise().sum().transpose();
  out.grad_x.noalias() = dz * layer.W;
  return out;
}

DenseBackward dense_backward(const DenseLayer& layer,
                             const Eigen::Ref<const Matrix>& x,
                             const Eigen::Ref<const Matrix>& upstream_grad) {
  return dense_backward_from_output(layer, x, dense_forward(layer, x), upstream_grad);
}

}  // namespace vaelab
