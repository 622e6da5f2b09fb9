#pragma once

#include <cstdint>
#include <optional>

#include "hybridgan/image_batch.hpp"
#include "hybridgan/network.hpp"

namespace hybridgan {

/// Discriminator score grid, shape (batch, 1, h', w').
template <typename Scalar>
using PatchMap = Tensor<Scalar>;

template <typename Scalar>
NetworkParameters<Scalar> build_discriminator(const DiscriminatorConfig& config, std::uint64_t seed) {
  config.validate();
  return initialize_parameters<Scalar>(discriminator_plan(config), config, seed);
}

template <typename Scalar>
const DiscriminatorConfig& discriminator_config(const NetworkParameters<Scalar>& params) {
  const auto* c = std::get_if<DiscriminatorConfig>(&params.config);
  if (c == nullptr) throw ConfigError("parameters do not describe a discriminator");
  return *c;
}

/// Side length of the input window seen by one output cell, by the usual
/// recurrence rf += (k - 1) * jump; jump *= stride.
inline Index receptive_field(const NetworkPlan& plan) {
  Index rf = 1;
  Index jump = 1;
  for (const ConvUnit* u : plan.units()) {
    rf += (u->geometry.kernel - 1) * jump;
    jump *= u->geometry.stride;
  }
  return rf;
}

inline Index receptive_field(const DiscriminatorConfig& config) {
  return receptive_field(discriminator_plan(config));
}

/// Spatial extent of the score grid for an input side of `input_size`.
inline Index patch_map_size(const DiscriminatorConfig& config, Index input_size) {
  Index size = input_size;
  for (const ConvUnit* u : discriminator_plan(config).units()) size = u->geometry.conv_output(size);
  return size;
}

namespace detail {

template <typename Scalar>
Tensor<Scalar> discriminator_input(const DiscriminatorConfig& c, const Tensor<Scalar>& image,
                                   const Tensor<Scalar>* condition) {
  if (c.condition_channels > 0 && condition == nullptr) {
    throw ArityError("conditional discriminator requires a condition input");
  }
  if (c.condition_channels == 0 && condition != nullptr) {
    throw ArityError("unconditional discriminator was given a condition input");
  }
  if (image.channels() != c.input_channels) {
    throw ShapeError("discriminator image channels: expected " + std::to_string(c.input_channels) +
                     ", got " + std::to_string(image.channels()));
  }
  if (condition == nullptr) return image;
  if (condition->channels() != c.condition_channels) {
    throw ShapeError("discriminator condition channels: expected " + std::to_string(c.condition_channels) +
                     ", got " + std::to_string(condition->channels()));
  }
  if (condition->height() != image.height() || condition->width() != image.width() ||
      condition->batch() != image.batch()) {
    throw ShapeError("condition " + condition->shape().str() + " does not match image " + image.shape().str());
  }
  return concat_channels(*condition, image);
}

}  // namespace detail

/// Scores `image`, conditioned on `condition` when the network is
/// conditional. The network input is the channel concatenation
/// [condition; image].
template <typename Scalar>
PatchMap<Scalar> discriminator_forward(const NetworkParameters<Scalar>& params, const Tensor<Scalar>& image,
                                       const Tensor<Scalar>* condition = nullptr,
                                       ForwardTape<Scalar>* tape = nullptr) {
  const DiscriminatorConfig& c = discriminator_config(params);
  return run_network(discriminator_plan(c), params, detail::discriminator_input(c, image, condition), tape);
}

template <typename Scalar>
PatchMap<Scalar> discriminator_forward(const NetworkParameters<Scalar>& params, const ImageBatch<Scalar>& image,
                                       const std::optional<ImageBatch<Scalar>>& condition) {
  return discriminator_forward(params, image.data, condition ? &condition->data : nullptr);
}

template <typename Scalar>
struct DiscriminatorInputGrads {
  Tensor<Scalar> condition;  // empty for unconditional networks
  Tensor<Scalar> image;
};

/// Backpropagates score gradients. Parameter gradients go to `grads` when it
/// is non-null; input gradients are returned when requested.
template <typename Scalar>
DiscriminatorInputGrads<Scalar> discriminator_backward(const NetworkParameters<Scalar>& params,
                                                       const ForwardTape<Scalar>& tape,
                                                       const PatchMap<Scalar>& d_scores,
                                                       ParameterGrads<Scalar>* grads, bool need_input_grad) {
  const DiscriminatorConfig& c = discriminator_config(params);
  Tensor<Scalar> d_in = backprop_network(discriminator_plan(c), params, tape, d_scores, grads, need_input_grad);
  DiscriminatorInputGrads<Scalar> out;
  if (!need_input_grad) return out;
  if (c.condition_channels == 0) {
    out.image = std::move(d_in);
  } else {
    split_channels(d_in, c.condition_channels, out.condition, out.image);
  }
  return out;
}

}  // namespace hybridgan
