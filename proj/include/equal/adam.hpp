#pragma once

#include <cstdint>

#include "equal/tensor.hpp"

namespace equal {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 2e-4;
};

struct AdamState {
  std::int64_t step = 0;
  Tensor m;
  Tensor v;

  static AdamState for_param(const Tensor& param) {
    return AdamState{0, zeros_like(param), zeros_like(param)};
  }
};

// Bias-corrected Adam with classic L2 weight decay folded into the gradient
// (g' = g + wd * p) before the moment updates. Rejects non-finite gradients.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg);

}  // namespace equal
