#include "vaelab/adam.hpp"

#include <cmath>
#include <string>

namespace vaelab {

AdamState make_adam_state(Index rows, Index cols, const AdamConfig& hp) {
  AdamState st;
  st.m = Matrix::Zero(rows, cols);
  st.v = Matrix::Zero(rows, cols);
  st.t = 0;
  st.hp = hp;
  return st;
}

void adam_step(Eigen::Ref<Matrix> params, const Eigen::Ref<const Matrix>& grads,
               AdamState& state, std::string_view block_name) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols() ||
      params.rows() != state.m.rows() || params.cols() != state.m.cols()) {
    throw DimensionError("adam_step: shape mismatch, params " + shape_str(params) +
                         ", grads " + shape_str(grads) + ", state " +
                         shape_str(state.m));
  }
  if (!grads.allFinite()) {
    throw TrainingError("adam_step: non-finite gradient in parameter block '" +
                            std::string(block_name) + "'",
                        -1);
  }

  const AdamConfig& hp = state.hp;
  state.t += 1;
  state.m = hp.beta1 * state.m + (1.0 - hp.beta1) * grads;
  state.v.array() =
      hp.beta2 * state.v.array() + (1.0 - hp.beta2) * grads.array().square();

  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  params.array() -= hp.lr * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + hp.eps);
}

}  // namespace vaelab
