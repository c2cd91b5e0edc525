#pragma once

#include "vaelab/types.hpp"

#include <cstdint>
#include <string_view>

namespace vaelab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter-block optimizer state; m and v mirror the block's shape
// (vectors are carried as n x 1).
struct AdamState {
  Matrix m;
  Matrix v;
  std::int64_t t = 0;
  AdamConfig hp;
};

AdamState make_adam_state(Index rows, Index cols, const AdamConfig& hp = {});

// One bias-corrected Adam update, in place. Throws TrainingError when the
// gradient contains NaN/Inf; `block_name` identifies the offending block.
void adam_step(Eigen::Ref<Matrix> params, const Eigen::Ref<const Matrix>& grads,
               AdamState& state, std::string_view block_name = "");

}  // namespace vaelab
