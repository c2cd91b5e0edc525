#pragma once

#include "vaelab/rng.hpp"
#include "vaelab/types.hpp"

namespace vaelab {

enum class Activation : std::uint8_t { identity = 0, relu = 1, sigmoid = 2 };

const char* activation_name(Activation a);

// Fully connected layer, batch rows convention: y = act(x * W^T + b^T).
struct DenseLayer {
  Matrix W;  // out x in
  Vector b;  // out
  Activation activation = Activation::identity;

  Index in_size() const { return W.cols(); }
  Index out_size() const { return W.rows(); }
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero bias.
// W is filled row by row so the draw order is pinned.
DenseLayer make_dense(Index in, Index out, Activation act, Rng& rng);

Matrix dense_forward(const DenseLayer& layer, const Eigen::Ref<const Matrix>& x);

struct DenseBackward {
  Matrix grad_w;  // out x in
  Vector grad_b;  // out
  Matrix grad_x;  // batch x in
};

DenseBackward dense_backward(const DenseLayer& layer,
                             const Eigen::Ref<const Matrix>& x,
                             const Eigen::Ref<const Matrix>& upstream_grad);

// Same gradients without recomputing the forward pass; y must be the
// layer's output for x. Training loops keep y around and call this.
DenseBackward dense_backward_from_output(const DenseLayer& layer,
                                         const Eigen::Ref<const Matrix>& x,
                                         const Eigen::Ref<const Matrix>& y,
                                         const Eigen::Ref<const Matrix>& upstream_grad);

}  // namespace vaelab
