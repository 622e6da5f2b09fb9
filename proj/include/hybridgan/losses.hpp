#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridgan/discriminator.hpp"
#include "hybridgan/tensor.hpp"

namespace hybridgan {

/// Weights of the non-adversarial generator terms. The same assignment is
/// used by both the paired and the unpaired objective.
struct LossWeights {
  double lambda_identity = 5.0;
  double lambda_cycle_l1 = 10.0;
  double lambda_perceptual = 10.0;

  void validate() const {
    if (!(lambda_identity >= 0)) throw ConfigError("lambda_identity must be >= 0");
    if (!(lambda_cycle_l1 >= 0)) throw ConfigError("lambda_cycle_l1 must be >= 0");
    if (!(lambda_perceptual >= 0)) throw ConfigError("lambda_perceptual must be >= 0");
  }
};

/// Which role the conditional discriminators D3/D4 played for a report.
enum class CganRole {
  conditional_paired,  // D4(x, y) vs D4(x, G1(x)); D3(y, x) vs D3(y, G2(y))
  adversarial_cycle,   // D3(G1(x), x) vs D3(G1(x), x_r); D4(G2(y), y) vs D4(G2(y), y_r)
};

inline const char* to_string(CganRole role) {
  return role == CganRole::conditional_paired ? "paired" : "cycle";
}

/// Every loss term of one training step. Generator-side adversarial terms
/// are the values the generators minimized; d1..d4 are the discriminator
/// losses.
struct LossReport {
  std::optional<double> gan_g1_d1;
  std::optional<double> gan_g2_d2;
  std::optional<double> cgan_d3;
  std::optional<double> cgan_d4;
  std::optional<CganRole> cgan_role;
  std::optional<double> cycle_l1;
  std::optional<double> identity;
  std::optional<double> perceptual;
  std::optional<double> d1;
  std::optional<double> d2;
  std::optional<double> d3;
  std::optional<double> d4;
  std::optional<double> total_generator;
  std::optional<double> total_discriminator;

  /// Named values that are present, in a fixed order.
  std::vector<std::pair<std::string, double>> entries() const {
    std::vector<std::pair<std::string, double>> out;
    auto add = [&](const char* name, const std::optional<double>& v) {
      if (v) out.emplace_back(name, *v);
    };
    add("gan_g1_d1", gan_g1_d1);
    add("gan_g2_d2", gan_g2_d2);
    add("cgan_d3", cgan_d3);
    add("cgan_d4", cgan_d4);
    add("cycle_l1", cycle_l1);
    add("identity", identity);
    add("perceptual", perceptual);
    add("d1", d1);
    add("d2", d2);
    add("d3", d3);
    add("d4", d4);
    add("total_generator", total_generator);
    add("total_discriminator", total_discriminator);
    return out;
  }

  bool all_finite() const {
    for (const auto& [name, v] : entries())
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct ObjectiveTotals {
  double generator = 0;
  std::array<double, 4> discriminators{};  // D1, D2, D3, D4

  double discriminator_sum() const {
    return discriminators[0] + discriminators[1] + discriminators[2] + discriminators[3];
  }
};

namespace detail {

inline double require_term(const std::optional<double>& v, const char* name) {
  if (!v) throw CompositionError(std::string("missing term '") + name + "'");
  return *v;
}

inline ObjectiveTotals compose(const LossReport& r, const LossWeights& w, CganRole role) {
  if (!r.cgan_role) throw CompositionError("missing term 'cgan_role'");
  if (*r.cgan_role != role) {
    throw CompositionError(std::string("terms 'cgan_d3'/'cgan_d4' are in the ") + to_string(*r.cgan_role) +
                           " role, expected " + to_string(role));
  }
  ObjectiveTotals t;
  t.generator = require_term(r.gan_g1_d1, "gan_g1_d1") + require_term(r.gan_g2_d2, "gan_g2_d2") +
                require_term(r.cgan_d4, "cgan_d4") + require_term(r.cgan_d3, "cgan_d3") +
                w.lambda_cycle_l1 * require_term(r.cycle_l1, "cycle_l1") +
                w.lambda_identity * require_term(r.identity, "identity");
  if (r.perceptual) {
    if (role != CganRole::conditional_paired) {
      throw CompositionError("term 'perceptual' is only part of the paired objective");
    }
    t.generator += w.lambda_perceptual * *r.perceptual;
  }
  t.discriminators = {require_term(r.d1, "d1"), require_term(r.d2, "d2"), require_term(r.d3, "d3"),
                      require_term(r.d4, "d4")};
  return t;
}

}  // namespace detail

/// Objective for aligned samples: both plain GAN terms, the conditional
/// terms of D4(x, ·) and D3(y, ·), weighted cycle-L1, weighted identity and
/// the optional weighted perceptual term.
inline ObjectiveTotals compose_paired_objective(const LossReport& report, const LossWeights& weights) {
  return detail::compose(report, weights, CganRole::conditional_paired);
}

/// Objective for unaligned samples: plain GAN terms, adversarial cycle
/// terms of D3/D4, weighted identity and weighted cycle-L1.
inline ObjectiveTotals compose_unpaired_objective(const LossReport& report, const LossWeights& weights) {
  return detail::compose(report, weights, CganRole::adversarial_cycle);
}

// Least-squares adversarial losses. Targets: real 1, fake 0, generator 1.
// All reductions are means over batch and patch cells.

template <typename Scalar>
Scalar ls_adversarial_d(const PatchMap<Scalar>& real, const PatchMap<Scalar>& fake,
                        PatchMap<Scalar>* d_real = nullptr, PatchMap<Scalar>* d_fake = nullptr) {
  require_same_shape(real, fake, "least-squares discriminator loss");
  const Scalar n = static_cast<Scalar>(real.size());
  const auto r = real.values().array() - Scalar(1);
  const auto f = fake.values().array();
  if (d_real != nullptr) {
    *d_real = PatchMap<Scalar>(real.shape());
    d_real->values() = (r / n).matrix();
  }
  if (d_fake != nullptr) {
    *d_fake = PatchMap<Scalar>(fake.shape());
    d_fake->values() = (f / n).matrix();
  }
  return Scalar(0.5) * r.square().mean() + Scalar(0.5) * f.square().mean();
}

template <typename Scalar>
Scalar ls_adversarial_g(const PatchMap<Scalar>& fake, PatchMap<Scalar>* d_fake = nullptr) {
  const auto f = fake.values().array() - Scalar(1);
  if (d_fake != nullptr) {
    *d_fake = PatchMap<Scalar>(fake.shape());
    d_fake->values() = (Scalar(2) * f / static_cast<Scalar>(fake.size())).matrix();
  }
  return f.square().mean();
}

template <typename Scalar>
struct AdversarialTerms {
  Scalar d_loss;
  Scalar g_loss;
};

/// Reconstruction judged by a conditional discriminator: `real` scores
/// D3(G1(x), x), `fake` scores D3(G1(x), x_r) (mirrored for D4).
template <typename Scalar>
AdversarialTerms<Scalar> adversarial_cycle_terms(const PatchMap<Scalar>& real, const PatchMap<Scalar>& fake) {
  return {ls_adversarial_d(real, fake), ls_adversarial_g(fake)};
}

/// Ground truth judged by a conditional discriminator: `real` scores
/// D4(x, y), `fake` scores D4(x, G1(x)) (mirrored for D3).
template <typename Scalar>
AdversarialTerms<Scalar> conditional_paired_terms(const PatchMap<Scalar>& real, const PatchMap<Scalar>& fake) {
  return {ls_adversarial_d(real, fake), ls_adversarial_g(fake)};
}

/// mean |a - b|; the gradient is taken with respect to `a`.
template <typename Scalar>
Scalar mean_abs_diff(const Tensor<Scalar>& a, const Tensor<Scalar>& b, Tensor<Scalar>* d_a = nullptr) {
  require_same_shape(a, b, "L1 distance");
  const auto diff = a.values().array() - b.values().array();
  if (d_a != nullptr) {
    *d_a = Tensor<Scalar>(a.shape());
    d_a->values() = (diff.sign() / static_cast<Scalar>(a.size())).matrix();
  }
  return diff.abs().mean();
}

/// mean|x_r - x| + mean|y_r - y|, gradients with respect to the reconstructions.
template <typename Scalar>
Scalar cycle_l1(const Tensor<Scalar>& x, const Tensor<Scalar>& x_rec, const Tensor<Scalar>& y,
                const Tensor<Scalar>& y_rec, Tensor<Scalar>* d_x_rec = nullptr,
                Tensor<Scalar>* d_y_rec = nullptr) {
  return mean_abs_diff(x_rec, x, d_x_rec) + mean_abs_diff(y_rec, y, d_y_rec);
}

/// mean|G1(y) - y| + mean|G2(x) - x|, gradients with respect to the generator outputs.
template <typename Scalar>
Scalar identity_loss(const Tensor<Scalar>& g1_of_y, const Tensor<Scalar>& y, const Tensor<Scalar>& g2_of_x,
                     const Tensor<Scalar>& x, Tensor<Scalar>* d_g1_of_y = nullptr,
                     Tensor<Scalar>* d_g2_of_x = nullptr) {
  return mean_abs_diff(g1_of_y, y, d_g1_of_y) + mean_abs_diff(g2_of_x, x, d_g2_of_x);
}

template <typename Scalar>
using FeatureStack = std::vector<Tensor<Scalar>>;

/// Sum over layers of weight * mean|fake - real|.
template <typename Scalar>
Scalar perceptual_loss(const FeatureStack<Scalar>& fake, const FeatureStack<Scalar>& real,
                       const std::vector<double>& layer_weights, FeatureStack<Scalar>* d_fake = nullptr) {
  if (fake.size() != real.size() || fake.size() != layer_weights.size()) {
    throw ArityError("perceptual loss: " + std::to_string(fake.size()) + " fake layers, " +
                     std::to_string(real.size()) + " real layers, " + std::to_string(layer_weights.size()) +
                     " weights");
  }
  if (d_fake != nullptr) d_fake->assign(fake.size(), Tensor<Scalar>());
  Scalar total = 0;
  for (std::size_t i = 0; i < fake.size(); ++i) {
    const Scalar w = static_cast<Scalar>(layer_weights[i]);
    total += w * mean_abs_diff(fake[i], real[i], d_fake ? &(*d_fake)[i] : nullptr);
    if (d_fake != nullptr) (*d_fake)[i].values() *= w;
  }
  return total;
}

/// Caller-supplied differentiable feature extractor (e.g. a pretrained
/// backbone) backing the perceptual term.
template <typename Scalar>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureStack<Scalar> extract(const Tensor<Scalar>& image) const = 0;
  /// d(loss)/d(image) given d(loss)/d(features) for the same image.
  virtual Tensor<Scalar> backward(const Tensor<Scalar>& image, const FeatureStack<Scalar>& d_features) const = 0;
  virtual std::vector<double> layer_weights() const = 0;
};

}  // namespace hybridgan
