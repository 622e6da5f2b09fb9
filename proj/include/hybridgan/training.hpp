#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "hybridgan/data.hpp"
#include "hybridgan/discriminator.hpp"
#include "hybridgan/generator.hpp"
#include "hybridgan/image_pool.hpp"
#include "hybridgan/losses.hpp"
#include "hybridgan/optimizer.hpp"

namespace hybridgan {

/// Index of each network inside TrainState::networks.
enum NetworkId : std::size_t { G1 = 0, G2 = 1, D1 = 2, D2 = 3, D3 = 4, D4 = 5 };
inline constexpr std::array<const char*, 6> kNetworkNames{"G1", "G2", "D1", "D2", "D3", "D4"};

/// Thrown when a step produces a non-finite loss; carries the partial report.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, LossReport report)
      : Error(ErrorClass::numeric, "numeric error: " + what), report_(std::move(report)) {}
  const LossReport& report() const { return report_; }

 private:
  LossReport report_;
};

/// Architecture of the full model. Generator and discriminator channel
/// counts are derived from the domain channel counts.
struct ModelSpec {
  Index x_channels = 3;
  Index y_channels = 3;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;

  GeneratorConfig g1() const {
    GeneratorConfig c = generator;
    c.input_channels = x_channels;
    c.output_channels = y_channels;
    return c;
  }
  GeneratorConfig g2() const {
    GeneratorConfig c = generator;
    c.input_channels = y_channels;
    c.output_channels = x_channels;
    return c;
  }
  /// D1 scores Y images, D2 X images; D3 scores X images conditioned on a Y
  /// image, D4 the reverse.
  DiscriminatorConfig discriminator_for(NetworkId id) const {
    DiscriminatorConfig c = discriminator;
    const bool scores_y = id == D1 || id == D4;
    c.input_channels = scores_y ? y_channels : x_channels;
    c.condition_channels = id == D3 ? y_channels : id == D4 ? x_channels : 0;
    return c;
  }
  bool identity_enabled() const { return x_channels == y_channels; }
};

/// Everything needed to continue training bit-exactly.
template <typename Scalar>
struct TrainState {
  int epoch = 1;           // epoch currently being trained (1-based)
  std::int64_t step = 0;   // steps already taken inside `epoch`
  Phase phase = Phase::paired;
  ModelSpec model;
  std::array<NetworkParameters<Scalar>, 6> networks;
  std::array<AdamState<Scalar>, 6> optimizers;
  std::array<ImagePool<Scalar>, 4> pools;  // D1..D4
  std::mt19937_64 rng;

  bool operator==(const TrainState& other) const {
    return epoch == other.epoch && step == other.step && phase == other.phase && networks == other.networks &&
           optimizers == other.optimizers && pools == other.pools && rng == other.rng;
  }
};

/// Per-network seeds derived from one run seed.
inline std::uint64_t network_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x6e657477u};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t(out[0]) << 32) | out[1];
}

template <typename Scalar>
TrainState<Scalar> make_train_state(const ModelSpec& model, const TrainConfig& config, Phase initial_phase) {
  config.validate();
  TrainState<Scalar> st;
  st.model = model;
  st.phase = initial_phase;
  st.networks[G1] = build_generator<Scalar>(model.g1(), network_seed(config.seed, G1));
  st.networks[G2] = build_generator<Scalar>(model.g2(), network_seed(config.seed, G2));
  for (NetworkId id : {D1, D2, D3, D4}) {
    st.networks[id] = build_discriminator<Scalar>(model.discriminator_for(id), network_seed(config.seed, id));
  }
  for (std::size_t i = 0; i < 6; ++i) st.optimizers[i] = make_adam_state(st.networks[i]);
  for (auto& pool : st.pools) pool = ImagePool<Scalar>(config.pool_capacity);
  st.rng.seed(network_seed(config.seed, 6));
  return st;
}

/// Generator outputs of one step, kept so the discriminator updates see
/// exactly the images the generators produced.
template <typename Scalar>
struct GeneratorPass {
  Tensor<Scalar> fake_y, fake_x, rec_x, rec_y, idt_y, idt_x;
  ForwardTape<Scalar> t_fake_y, t_fake_x, t_rec_x, t_rec_y, t_idt_y, t_idt_x;
};

/// Inputs handed to the conditional discriminators, recorded for inspection.
template <typename Scalar>
struct StepTrace {
  Tensor<Scalar> d3_real_condition, d3_fake_condition;
  Tensor<Scalar> d4_real_condition, d4_fake_condition;
  std::array<PoolEntry<Scalar>, 4> pooled;  // what each discriminator was trained on as fake
};

namespace detail {

template <typename Scalar>
void add_into(Tensor<Scalar>& acc, const Tensor<Scalar>& g) {
  if (acc.empty()) {
    acc = g;
  } else {
    acc.values() += g.values();
  }
}

/// Generator-side adversarial term for one discriminator; returns the loss
/// and, when requested, gradients with respect to the condition and image.
template <typename Scalar>
Scalar generator_adversarial(const NetworkParameters<Scalar>& disc, const Tensor<Scalar>& image,
                             const Tensor<Scalar>* condition, Tensor<Scalar>* d_image, Tensor<Scalar>* d_condition) {
  const bool want_grad = d_image != nullptr;
  ForwardTape<Scalar> tape;
  const PatchMap<Scalar> scores = discriminator_forward(disc, image, condition, want_grad ? &tape : nullptr);
  PatchMap<Scalar> d_scores;
  const Scalar loss = ls_adversarial_g(scores, want_grad ? &d_scores : nullptr);
  if (want_grad) {
    auto grads = discriminator_backward<Scalar>(disc, tape, d_scores, nullptr, true);
    add_into(*d_image, grads.image);
    if (d_condition != nullptr) add_into(*d_condition, grads.condition);
  }
  return loss;
}

}  // namespace detail

/// Evaluates the generator side of the objective for the given role. With
/// `grads` non-null it also backpropagates into G1 (grads[0]) and G2
/// (grads[1]). Fills the generator terms and total_generator of the report.
template <typename Scalar>
LossReport generator_objective(const TrainState<Scalar>& st, const Tensor<Scalar>& x, const Tensor<Scalar>& y,
                               const TrainConfig& config, CganRole role,
                               const FeatureExtractor<Scalar>* perceptual, GeneratorPass<Scalar>& pass,
                               std::array<ParameterGrads<Scalar>, 2>* grads) {
  const bool backprop = grads != nullptr;
  const auto& g1 = st.networks[G1];
  const auto& g2 = st.networks[G2];
  const bool identity_on = st.model.identity_enabled();
  LossWeights w = config.weights;
  if (!identity_on) w.lambda_identity = 0;

  pass.fake_y = generator_forward(g1, x, &pass.t_fake_y);
  pass.fake_x = generator_forward(g2, y, &pass.t_fake_x);
  pass.rec_x = generator_forward(g2, pass.fake_y, &pass.t_rec_x);
  pass.rec_y = generator_forward(g1, pass.fake_x, &pass.t_rec_y);

  Tensor<Scalar> d_fake_y, d_fake_x, d_rec_x, d_rec_y, d_idt_y, d_idt_x;
  auto grad_slot = [&](Tensor<Scalar>& t) { return backprop ? &t : nullptr; };

  LossReport r;
  r.cgan_role = role;
  r.gan_g1_d1 = detail::generator_adversarial<Scalar>(st.networks[D1], pass.fake_y, nullptr, grad_slot(d_fake_y), nullptr);
  r.gan_g2_d2 = detail::generator_adversarial<Scalar>(st.networks[D2], pass.fake_x, nullptr, grad_slot(d_fake_x), nullptr);
  if (role == CganRole::conditional_paired) {
    // D4(x, G1(x)) and D3(y, G2(y)); the conditions are data.
    r.cgan_d4 = detail::generator_adversarial<Scalar>(st.networks[D4], pass.fake_y, &x, grad_slot(d_fake_y), nullptr);
    r.cgan_d3 = detail::generator_adversarial<Scalar>(st.networks[D3], pass.fake_x, &y, grad_slot(d_fake_x), nullptr);
  } else {
    // D3(G1(x), x_r) and D4(G2(y), y_r); the conditions are generated too.
    r.cgan_d3 = detail::generator_adversarial<Scalar>(st.networks[D3], pass.rec_x, &pass.fake_y, grad_slot(d_rec_x),
                                              grad_slot(d_fake_y));
    r.cgan_d4 = detail::generator_adversarial<Scalar>(st.networks[D4], pass.rec_y, &pass.fake_x, grad_slot(d_rec_y),
                                              grad_slot(d_fake_x));
  }

  Tensor<Scalar> g_rec_x, g_rec_y;
  r.cycle_l1 = cycle_l1(x, pass.rec_x, y, pass.rec_y, grad_slot(g_rec_x), grad_slot(g_rec_y));
  if (backprop) {
    g_rec_x.values() *= static_cast<Scalar>(w.lambda_cycle_l1);
    g_rec_y.values() *= static_cast<Scalar>(w.lambda_cycle_l1);
    detail::add_into(d_rec_x, g_rec_x);
    detail::add_into(d_rec_y, g_rec_y);
  }

  if (identity_on) {
    pass.idt_y = generator_forward(g1, y, &pass.t_idt_y);
    pass.idt_x = generator_forward(g2, x, &pass.t_idt_x);
    r.identity = identity_loss(pass.idt_y, y, pass.idt_x, x, grad_slot(d_idt_y), grad_slot(d_idt_x));
    if (backprop) {
      d_idt_y.values() *= static_cast<Scalar>(w.lambda_identity);
      d_idt_x.values() *= static_cast<Scalar>(w.lambda_identity);
    }
  } else {
    r.identity = 0.0;
  }

  if (perceptual != nullptr && role == CganRole::conditional_paired) {
    FeatureStack<Scalar> d_features;
    const FeatureStack<Scalar> fake_features = perceptual->extract(pass.fake_y);
    const FeatureStack<Scalar> real_features = perceptual->extract(y);
    r.perceptual = perceptual_loss(fake_features, real_features, perceptual->layer_weights(),
                                   backprop ? &d_features : nullptr);
    if (backprop) {
      Tensor<Scalar> d_image = perceptual->backward(pass.fake_y, d_features);
      d_image.values() *= static_cast<Scalar>(w.lambda_perceptual);
      detail::add_into(d_fake_y, d_image);
    }
  }

  double total = *r.gan_g1_d1 + *r.gan_g2_d2 + *r.cgan_d3 + *r.cgan_d4 + w.lambda_cycle_l1 * *r.cycle_l1 +
                 w.lambda_identity * *r.identity;
  if (r.perceptual) total += w.lambda_perceptual * *r.perceptual;
  r.total_generator = total;

  if (backprop) {
    auto& [grad_g1, grad_g2] = *grads;
    grad_g1 = zeros_like(g1);
    grad_g2 = zeros_like(g2);
    // Reconstructions first: they feed gradients back into the translations.
    detail::add_into(d_fake_y, generator_backward(g2, pass.t_rec_x, d_rec_x, &grad_g2, true));
    detail::add_into(d_fake_x, generator_backward(g1, pass.t_rec_y, d_rec_y, &grad_g1, true));
    generator_backward(g1, pass.t_fake_y, d_fake_y, &grad_g1, false);
    generator_backward(g2, pass.t_fake_x, d_fake_x, &grad_g2, false);
    if (identity_on) {
      generator_backward(g1, pass.t_idt_y, d_idt_y, &grad_g1, false);
      generator_backward(g2, pass.t_idt_x, d_idt_x, &grad_g2, false);
    }
  }
  return r;
}

namespace detail {

/// Routes a fresh batch through a pool one sample at a time.
template <typename Scalar>
PoolEntry<Scalar> pool_batch(ImagePool<Scalar>& pool, const Tensor<Scalar>& image, const Tensor<Scalar>* condition,
                             std::mt19937_64& rng) {
  if (image.batch() == 1) {
    PoolEntry<Scalar> fresh{image, condition ? std::optional<Tensor<Scalar>>(*condition) : std::nullopt};
    return pool.query(std::move(fresh), rng);
  }
  PoolEntry<Scalar> out{Tensor<Scalar>(image.shape()),
                        condition ? std::optional<Tensor<Scalar>>(Tensor<Scalar>(condition->shape())) : std::nullopt};
  for (Index n = 0; n < image.batch(); ++n) {
    PoolEntry<Scalar> fresh{slice_batch(image, n),
                            condition ? std::optional<Tensor<Scalar>>(slice_batch(*condition, n)) : std::nullopt};
    PoolEntry<Scalar> got = pool.query(std::move(fresh), rng);
    out.image.sample(n) = got.image.sample(0);
    if (condition) out.condition->sample(n) = got.condition->sample(0);
  }
  return out;
}

/// One least-squares update of a discriminator on (real, pooled fake).
template <typename Scalar>
double discriminator_update(NetworkParameters<Scalar>& disc, AdamState<Scalar>& adam, const OptimizerSpec& spec,
                            double lr, const Tensor<Scalar>& real_image, const Tensor<Scalar>* real_condition,
                            const PoolEntry<Scalar>& fake) {
  ForwardTape<Scalar> t_real, t_fake;
  const Tensor<Scalar>* fake_condition = fake.condition ? &*fake.condition : nullptr;
  const PatchMap<Scalar> real_scores = discriminator_forward(disc, real_image, real_condition, &t_real);
  const PatchMap<Scalar> fake_scores = discriminator_forward(disc, fake.image, fake_condition, &t_fake);
  PatchMap<Scalar> d_real, d_fake;
  const double loss = ls_adversarial_d(real_scores, fake_scores, &d_real, &d_fake);
  if (!std::isfinite(loss)) return loss;
  ParameterGrads<Scalar> grads = zeros_like(disc);
  discriminator_backward(disc, t_real, d_real, &grads, false);
  discriminator_backward(disc, t_fake, d_fake, &grads, false);
  adam_step(disc, adam, grads, spec, lr);
  return loss;
}

template <typename Scalar>
LossReport training_step(TrainState<Scalar>& st, const Tensor<Scalar>& x, const Tensor<Scalar>& y,
                         const TrainConfig& config, CganRole role, const FeatureExtractor<Scalar>* perceptual,
                         StepTrace<Scalar>* trace) {
  if (x.batch() != y.batch() || x.height() != y.height() || x.width() != y.width()) {
    throw ShapeError("x " + x.shape().str() + " and y " + y.shape().str() + " must share batch and spatial size");
  }
  const double lr_main = lr_at_epoch(config.main_optimizer, st.epoch, config);
  const double lr_cond = lr_at_epoch(config.conditional_optimizer, st.epoch, config);

  GeneratorPass<Scalar> pass;
  std::array<ParameterGrads<Scalar>, 2> g_grads;
  LossReport report = generator_objective(st, x, y, config, role, perceptual, pass, &g_grads);
  if (!report.all_finite()) throw NumericError("non-finite generator loss", report);
  adam_step(st.networks[G1], st.optimizers[G1], g_grads[0], config.main_optimizer, lr_main);
  adam_step(st.networks[G2], st.optimizers[G2], g_grads[1], config.main_optimizer, lr_main);

  // Conditional real/fake tuples. Within one step the real and the fresh
  // fake tuple of each conditional discriminator share the same condition.
  const bool paired = role == CganRole::conditional_paired;
  const Tensor<Scalar>& d3_condition = paired ? y : pass.fake_y;
  const Tensor<Scalar>& d3_fake = paired ? pass.fake_x : pass.rec_x;
  const Tensor<Scalar>& d4_condition = paired ? x : pass.fake_x;
  const Tensor<Scalar>& d4_fake = paired ? pass.fake_y : pass.rec_y;

  std::array<PoolEntry<Scalar>, 4> pooled;
  pooled[0] = pool_batch<Scalar>(st.pools[0], pass.fake_y, nullptr, st.rng);
  pooled[1] = pool_batch<Scalar>(st.pools[1], pass.fake_x, nullptr, st.rng);
  pooled[2] = pool_batch<Scalar>(st.pools[2], d3_fake, &d3_condition, st.rng);
  pooled[3] = pool_batch<Scalar>(st.pools[3], d4_fake, &d4_condition, st.rng);

  report.d1 = discriminator_update<Scalar>(st.networks[D1], st.optimizers[D1], config.main_optimizer, lr_main, y, nullptr,
                                   pooled[0]);
  report.d2 = discriminator_update<Scalar>(st.networks[D2], st.optimizers[D2], config.main_optimizer, lr_main, x, nullptr,
                                   pooled[1]);
  report.d3 = discriminator_update<Scalar>(st.networks[D3], st.optimizers[D3], config.conditional_optimizer, lr_cond, x,
                                   &d3_condition, pooled[2]);
  report.d4 = discriminator_update<Scalar>(st.networks[D4], st.optimizers[D4], config.conditional_optimizer, lr_cond, y,
                                   &d4_condition, pooled[3]);

  LossWeights w = config.weights;
  if (!st.model.identity_enabled()) w.lambda_identity = 0;
  const ObjectiveTotals totals = paired ? compose_paired_objective(report, w) : compose_unpaired_objective(report, w);
  report.total_generator = totals.generator;
  report.total_discriminator = totals.discriminator_sum();
  if (!report.all_finite()) throw NumericError("non-finite discriminator loss", report);

  if (trace != nullptr) {
    trace->d3_real_condition = d3_condition;
    trace->d3_fake_condition = d3_condition;
    trace->d4_real_condition = d4_condition;
    trace->d4_fake_condition = d4_condition;
    trace->pooled = std::move(pooled);
  }
  ++st.step;
  return report;
}

}  // namespace detail

/// One iteration on an aligned pair: joint generator update on the paired
/// objective, then D1..D4 on their own losses with pool-mediated fakes.
template <typename Scalar>
LossReport training_step_paired(TrainState<Scalar>& state, const Tensor<Scalar>& x, const Tensor<Scalar>& y,
                                const TrainConfig& config, const FeatureExtractor<Scalar>* perceptual = nullptr,
                                StepTrace<Scalar>* trace = nullptr) {
  if (state.phase != Phase::paired) throw PhaseError("paired step requested during the unpaired phase");
  return detail::training_step(state, x, y, config, CganRole::conditional_paired, perceptual, trace);
}

/// One iteration on a non-corresponding (x, y) tuple, with D3/D4 judging
/// reconstructions given the intermediate translation.
template <typename Scalar>
LossReport training_step_unpaired(TrainState<Scalar>& state, const Tensor<Scalar>& x, const Tensor<Scalar>& y,
                                  const TrainConfig& config, StepTrace<Scalar>* trace = nullptr) {
  if (state.phase != Phase::unpaired) throw PhaseError("unpaired step requested during the paired phase");
  return detail::training_step<Scalar>(state, x, y, config, CganRole::adversarial_cycle, nullptr, trace);
}

}  // namespace hybridgan
