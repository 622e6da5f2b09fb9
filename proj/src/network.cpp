#include "hybridgan/network.hpp"

namespace hybridgan {

namespace {

ConvUnit conv(std::string name, Index in, Index out, Index kernel, Index stride, Index padding,
              ops::PadMode mode, bool norm, ops::Activation act) {
  ConvUnit u;
  u.name = std::move(name);
  u.in_channels = in;
  u.out_channels = out;
  u.geometry = ops::ConvGeometry{kernel, stride, padding, mode, 0};
  u.norm = norm;
  u.activation = act;
  return u;
}

}  // namespace

NetworkPlan generator_plan(const GeneratorConfig& c) {
  c.validate();
  using ops::Activation;
  using ops::PadMode;
  const Index f = c.base_filters;
  NetworkPlan plan;
  plan.blocks.push_back({{conv("c7s1_in", c.input_channels, f, 7, 1, 3, PadMode::reflect, true, Activation::relu)}});
  plan.blocks.push_back({{conv("down1", f, 2 * f, 3, 2, 1, PadMode::reflect, true, Activation::relu)}});
  plan.blocks.push_back({{conv("down2", 2 * f, 4 * f, 3, 2, 1, PadMode::reflect, true, Activation::relu)}});
  for (Index i = 0; i < c.num_resblocks; ++i) {
    const std::string name = "res" + std::to_string(i + 1);
    Block block;
    block.residual = true;
    block.units.push_back(conv(name + ".conv1", 4 * f, 4 * f, 3, 1, 1, PadMode::reflect, true, Activation::relu));
    block.units.push_back(conv(name + ".conv2", 4 * f, 4 * f, 3, 1, 1, PadMode::reflect, true, Activation::none));
    plan.blocks.push_back(std::move(block));
  }
  for (Index i = 0; i < 2; ++i) {
    const Index in = (4 * f) >> i;
    ConvUnit up = conv("up" + std::to_string(i + 1), in, in / 2, 3, 2, 1, PadMode::zero, true, Activation::relu);
    up.transposed = true;
    up.geometry.output_padding = 1;
    plan.blocks.push_back({{up}});
  }
  plan.blocks.push_back(
      {{conv("c7s1_out", f, c.output_channels, 7, 1, 3, PadMode::reflect, false, Activation::tanh)}});
  return plan;
}

NetworkPlan discriminator_plan(const DiscriminatorConfig& c) {
  c.validate();
  using ops::Activation;
  using ops::PadMode;
  NetworkPlan plan;
  plan.leaky_slope = c.leaky_slope;
  Index in = c.total_input_channels();
  for (std::size_t i = 0; i < c.layer_filters.size(); ++i) {
    // no normalization on the first layer
    plan.blocks.push_back({{conv("C" + std::to_string(i + 1), in, c.layer_filters[i], 4, c.layer_strides[i], 1,
                                 PadMode::zero, i > 0, Activation::leaky_relu)}});
    in = c.layer_filters[i];
  }
  plan.blocks.push_back({{conv("score", in, 1, 4, 1, 1, PadMode::zero, false, Activation::none)}});
  return plan;
}

}  // namespace hybridgan
