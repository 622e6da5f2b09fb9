#pragma once

#include <Eigen/Core>

#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "hybridgan/config.hpp"
#include "hybridgan/ops.hpp"
#include "hybridgan/tensor.hpp"

namespace hybridgan {

/// One convolution (plain or fractionally strided) with optional instance
/// norm and an activation.
struct ConvUnit {
  std::string name;
  bool transposed = false;
  Index in_channels = 0;
  Index out_channels = 0;
  ops::ConvGeometry geometry;
  bool norm = true;
  ops::Activation activation = ops::Activation::relu;

  /// conv: [out][in][k][k]; transposed: [in][out][k][k]
  std::vector<Index> weight_shape() const {
    const Index k = geometry.kernel;
    return transposed ? std::vector<Index>{in_channels, out_channels, k, k}
                      : std::vector<Index>{out_channels, in_channels, k, k};
  }
};

/// A sequential run of units. Residual blocks add their input to the output
/// of their last unit.
struct Block {
  std::vector<ConvUnit> units;
  bool residual = false;
};

struct NetworkPlan {
  std::vector<Block> blocks;
  double leaky_slope = 0.2;

  std::vector<const ConvUnit*> units() const {
    std::vector<const ConvUnit*> out;
    for (const Block& b : blocks)
      for (const ConvUnit& u : b.units) out.push_back(&u);
    return out;
  }
};

NetworkPlan generator_plan(const GeneratorConfig& config);
NetworkPlan discriminator_plan(const DiscriminatorConfig& config);

template <typename Scalar>
struct NamedTensor {
  std::string name;
  std::vector<Index> shape;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;

  bool operator==(const NamedTensor&) const = default;
};

using ArchitectureConfig = std::variant<GeneratorConfig, DiscriminatorConfig>;

/// Learnable weights of one network. Weight i belongs to unit i/2 of the
/// plan (even: kernel, odd: bias).
template <typename Scalar>
struct NetworkParameters {
  ArchitectureConfig config;
  std::vector<NamedTensor<Scalar>> weights;

  Index param_count() const {
    Index total = 0;
    for (const auto& w : weights) total += w.values.size();
    return total;
  }

  NetworkPlan plan() const {
    return std::visit(
        [](const auto& c) -> NetworkPlan {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, GeneratorConfig>) {
            return generator_plan(c);
          } else {
            return discriminator_plan(c);
          }
        },
        config);
  }

  bool operator==(const NetworkParameters&) const = default;
};

/// Gradients (or optimizer moments) laid out like NetworkParameters::weights.
template <typename Scalar>
using ParameterGrads = std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

template <typename Scalar>
ParameterGrads<Scalar> zeros_like(const NetworkParameters<Scalar>& params) {
  ParameterGrads<Scalar> out;
  out.reserve(params.weights.size());
  for (const auto& w : params.weights) out.push_back(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(w.values.size()));
  return out;
}

/// Allocates every weight of `plan`; kernels ~ N(0, 0.02), biases 0, drawn
/// in declaration order from a generator seeded with `seed`.
template <typename Scalar>
NetworkParameters<Scalar> initialize_parameters(const NetworkPlan& plan, ArchitectureConfig config,
                                                std::uint64_t seed) {
  NetworkParameters<Scalar> params{std::move(config), {}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (const ConvUnit* u : plan.units()) {
    NamedTensor<Scalar> kernel{u->name + ".weight", u->weight_shape(), {}};
    Index count = 1;
    for (Index d : kernel.shape) count *= d;
    kernel.values.resize(count);
    for (Index i = 0; i < count; ++i) kernel.values[i] = static_cast<Scalar>(normal(rng));
    params.weights.push_back(std::move(kernel));
    params.weights.push_back(NamedTensor<Scalar>{u->name + ".bias", {u->out_channels},
                                                 Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(u->out_channels)});
  }
  return params;
}

/// Intermediate values kept by a forward pass for the matching backward pass.
template <typename Scalar>
struct ForwardTape {
  struct Unit {
    Tensor<Scalar> input;
    Tensor<Scalar> normed;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std;
    Tensor<Scalar> output;
  };
  std::vector<Unit> units;
};

namespace detail {

template <typename Scalar>
ops::WeightMap<Scalar> kernel_map(const NamedTensor<Scalar>& w) {
  return ops::WeightMap<Scalar>(w.values.data(), w.shape[0], w.values.size() / w.shape[0]);
}

template <typename Scalar>
Tensor<Scalar> unit_forward(const ConvUnit& u, const NamedTensor<Scalar>& kernel,
                            const NamedTensor<Scalar>& bias, const Tensor<Scalar>& x, Scalar slope,
                            typename ForwardTape<Scalar>::Unit* cache) {
  const auto w = kernel_map(kernel);
  const ops::BiasMap<Scalar> b(bias.values.data(), bias.values.size());
  Tensor<Scalar> y = u.transposed ? ops::conv_transpose2d(x, w, b, u.geometry) : ops::conv2d(x, w, b, u.geometry);
  if (u.norm) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std;
    y = ops::instance_norm(y, inv_std);
    if (cache != nullptr) {
      cache->normed = y;
      cache->inv_std = std::move(inv_std);
    }
  }
  ops::activate(y, u.activation, slope);
  if (cache != nullptr) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> unit_backward(const ConvUnit& u, const NamedTensor<Scalar>& kernel,
                             const typename ForwardTape<Scalar>::Unit& cache, const Tensor<Scalar>& dy,
                             Scalar slope, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* d_kernel,
                             Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* d_bias, bool need_input_grad) {
  Tensor<Scalar> g = ops::activation_backward(cache.output, u.activation, slope, dy);
  if (u.norm) g = ops::instance_norm_backward(cache.normed, cache.inv_std, g);
  const auto w = kernel_map(kernel);
  std::optional<ops::MutableWeightMap<Scalar>> dw;
  std::optional<ops::MutableBiasMap<Scalar>> db;
  if (d_kernel != nullptr) dw.emplace(d_kernel->data(), w.rows(), w.cols());
  if (d_bias != nullptr) db.emplace(d_bias->data(), d_bias->size());
  auto* dw_ptr = dw ? &*dw : nullptr;
  auto* db_ptr = db ? &*db : nullptr;
  return u.transposed
             ? ops::conv_transpose2d_backward(cache.input, w, u.geometry, g, dw_ptr, db_ptr, need_input_grad)
             : ops::conv2d_backward(cache.input, w, u.geometry, g, dw_ptr, db_ptr, need_input_grad);
}

}  // namespace detail

/// Runs `plan` on `x`. Pass a tape to enable backpropagation.
template <typename Scalar>
Tensor<Scalar> run_network(const NetworkPlan& plan, const NetworkParameters<Scalar>& params,
                           const Tensor<Scalar>& x, ForwardTape<Scalar>* tape = nullptr) {
  const Scalar slope = static_cast<Scalar>(plan.leaky_slope);
  if (tape != nullptr) tape->units.clear();
  std::size_t unit_index = 0;
  Tensor<Scalar> h = x;
  for (const Block& block : plan.blocks) {
    Tensor<Scalar> block_in;
    if (block.residual) block_in = h;
    for (const ConvUnit& u : block.units) {
      typename ForwardTape<Scalar>::Unit* cache = nullptr;
      if (tape != nullptr) cache = &tape->units.emplace_back();
      h = detail::unit_forward(u, params.weights[2 * unit_index], params.weights[2 * unit_index + 1], h,
                               slope, cache);
      ++unit_index;
    }
    if (block.residual) h.values() += block_in.values();
  }
  return h;
}

/// Backpropagates `dy` through a taped forward pass. Parameter gradients are
/// accumulated into `grads` when it is non-null. Returns d(loss)/d(input),
/// or an empty tensor when `need_input_grad` is false.
template <typename Scalar>
Tensor<Scalar> backprop_network(const NetworkPlan& plan, const NetworkParameters<Scalar>& params,
                                const ForwardTape<Scalar>& tape, const Tensor<Scalar>& dy,
                                ParameterGrads<Scalar>* grads, bool need_input_grad = true) {
  const Scalar slope = static_cast<Scalar>(plan.leaky_slope);
  std::size_t unit_index = tape.units.size();
  Tensor<Scalar> g = dy;
  for (auto block = plan.blocks.rbegin(); block != plan.blocks.rend(); ++block) {
    Tensor<Scalar> skip;
    if (block->residual) skip = g;
    for (auto u = block->units.rbegin(); u != block->units.rend(); ++u) {
      --unit_index;
      const bool first_unit = unit_index == 0;
      auto* dk = grads ? &(*grads)[2 * unit_index] : nullptr;
      auto* db = grads ? &(*grads)[2 * unit_index + 1] : nullptr;
      g = detail::unit_backward(*u, params.weights[2 * unit_index], tape.units[unit_index], g, slope, dk, db,
                                need_input_grad || !first_unit);
    }
    if (block->residual && !g.empty()) g.values() += skip.values();
  }
  return g;
}

}  // namespace hybridgan
