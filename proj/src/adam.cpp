#include "equal/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace equal {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg) {
  if (!param.same_shape(grad) || !param.same_shape(state.m) ||
      !param.same_shape(state.v)) {
    throw std::invalid_argument("adam_step: shape mismatch between param " +
                                shape_string(param.extents) + ", grad " +
                                shape_string(grad.extents) + " and state");
  }
  if (!grad.all_finite()) {
    throw std::runtime_error("adam_step: non-finite gradient at step " +
                             std::to_string(state.step + 1));
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.numel(); ++i) {
    const double g = grad[i] + cfg.weight_decay * param[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace equal
