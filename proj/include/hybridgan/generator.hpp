#pragma once

#include <cstdint>

#include "hybridgan/image_batch.hpp"
#include "hybridgan/network.hpp"

namespace hybridgan {

template <typename Scalar>
NetworkParameters<Scalar> build_generator(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  return initialize_parameters<Scalar>(generator_plan(config), config, seed);
}

template <typename Scalar>
const GeneratorConfig& generator_config(const NetworkParameters<Scalar>& params) {
  const auto* c = std::get_if<GeneratorConfig>(&params.config);
  if (c == nullptr) throw ConfigError("parameters do not describe a generator");
  return *c;
}

/// Tensor-level translation; the tape (optional) records intermediates for
/// generator_backward.
template <typename Scalar>
Tensor<Scalar> generator_forward(const NetworkParameters<Scalar>& params, const Tensor<Scalar>& input,
                                 ForwardTape<Scalar>* tape = nullptr) {
  const GeneratorConfig& c = generator_config(params);
  const Shape4& s = input.shape();
  if (s.c != c.input_channels) {
    throw ShapeError("generator input channels: expected " + std::to_string(c.input_channels) + ", got " +
                     std::to_string(s.c));
  }
  if (s.h % 4 != 0 || s.w % 4 != 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("generator input spatial size must be a positive multiple of 4, got " +
                     std::to_string(s.h) + "x" + std::to_string(s.w));
  }
  return run_network(generator_plan(c), params, input, tape);
}

template <typename Scalar>
ImageBatch<Scalar> generator_forward(const NetworkParameters<Scalar>& params, const ImageBatch<Scalar>& input) {
  return ImageBatch<Scalar>{generator_forward(params, input.data), flip(input.domain), Scalar(-1), Scalar(1)};
}

template <typename Scalar>
Tensor<Scalar> generator_backward(const NetworkParameters<Scalar>& params, const ForwardTape<Scalar>& tape,
                                  const Tensor<Scalar>& d_output, ParameterGrads<Scalar>* grads,
                                  bool need_input_grad = false) {
  return backprop_network(generator_plan(generator_config(params)), params, tape, d_output, grads,
                          need_input_grad);
}

}  // namespace hybridgan
