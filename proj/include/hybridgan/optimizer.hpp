#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>

#include "hybridgan/losses.hpp"
#include "hybridgan/network.hpp"

namespace hybridgan {

enum class LrSchedule { constant_then_linear, constant };

/// Adam hyperparameters and learning-rate schedule of one network.
struct OptimizerSpec {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double base_lr = 2e-4;
  LrSchedule schedule = LrSchedule::constant_then_linear;

  /// G1, G2, D1, D2
  static OptimizerSpec main_default() { return {}; }
  /// D3, D4
  static OptimizerSpec conditional_default() {
    OptimizerSpec s;
    s.base_lr = 1e-4;
    s.schedule = LrSchedule::constant;
    return s;
  }
};

struct TrainConfig {
  int total_epochs = 200;
  int paired_epochs = 50;
  int lr_constant_epochs = 100;
  int batch_size = 1;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t pool_capacity = 50;
  OptimizerSpec main_optimizer = OptimizerSpec::main_default();
  OptimizerSpec conditional_optimizer = OptimizerSpec::conditional_default();
  /// In the unpaired phase, aligned images also serve as unpaired singletons.
  bool reuse_paired_as_unpaired = true;
  bool reset_moments_at_phase_switch = false;
  bool clear_conditional_pools_at_phase_switch = false;

  void validate() const {
    if (total_epochs < 1) throw ConfigError("total_epochs must be >= 1");
    if (paired_epochs < 0 || paired_epochs > lr_constant_epochs || lr_constant_epochs > total_epochs) {
      throw ConfigError("require paired_epochs <= lr_constant_epochs <= total_epochs, got " +
                        std::to_string(paired_epochs) + ", " + std::to_string(lr_constant_epochs) + ", " +
                        std::to_string(total_epochs));
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    weights.validate();
  }
};

/// Learning rate in effect during `epoch` (1-based).
inline double lr_at_epoch(const OptimizerSpec& spec, int epoch, const TrainConfig& config) {
  if (epoch < 1 || epoch > config.total_epochs) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(config.total_epochs) + "]");
  }
  if (spec.schedule == LrSchedule::constant || epoch <= config.lr_constant_epochs) return spec.base_lr;
  const double decay_span = config.total_epochs - config.lr_constant_epochs;
  return spec.base_lr * (1.0 - (epoch - config.lr_constant_epochs) / decay_span);
}

/// First/second moment state of one network.
template <typename Scalar>
struct AdamState {
  ParameterGrads<Scalar> first_moment;
  ParameterGrads<Scalar> second_moment;
  std::int64_t steps = 0;

  bool operator==(const AdamState&) const = default;
};

template <typename Scalar>
AdamState<Scalar> make_adam_state(const NetworkParameters<Scalar>& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

/// One bias-corrected Adam update with learning rate `lr`.
template <typename Scalar>
void adam_step(NetworkParameters<Scalar>& params, AdamState<Scalar>& state, const ParameterGrads<Scalar>& grads,
               const OptimizerSpec& spec, double lr) {
  ++state.steps;
  const Scalar b1 = static_cast<Scalar>(spec.beta1);
  const Scalar b2 = static_cast<Scalar>(spec.beta2);
  const Scalar correction1 = Scalar(1) - static_cast<Scalar>(std::pow(spec.beta1, double(state.steps)));
  const Scalar correction2 = Scalar(1) - static_cast<Scalar>(std::pow(spec.beta2, double(state.steps)));
  const Scalar step = static_cast<Scalar>(lr);
  const Scalar eps = static_cast<Scalar>(spec.epsilon);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params.weights[i].values.array() -= step * (m / correction1) / ((v / correction2).sqrt() + eps);
  }
}

}  // namespace hybridgan
