#pragma once

#include <map>
#include <string>
#include <vector>

#include "hybridgan/errors.hpp"
#include "hybridgan/tensor.hpp"

namespace hybridgan {

enum class NormKind { instance };
enum class PaddingKind { reflection };

/// ResNet-style translator: c7s1-k, two stride-2 downsamplings, residual
/// blocks, two fractionally-strided upsamplings, c7s1-out.
struct GeneratorConfig {
  Index input_channels = 3;
  Index output_channels = 3;
  Index base_filters = 64;
  Index num_resblocks = 9;
  NormKind norm = NormKind::instance;
  PaddingKind padding = PaddingKind::reflection;

  void validate() const;
  /// Layer string in the c7s1-k / dk / Rk / uk notation.
  std::string describe() const;
  bool operator==(const GeneratorConfig&) const = default;
};

/// PatchGAN scorer. `layer_strides` pairs with `layer_filters`; the final
/// 1-channel score conv is always 4x4 stride 1.
struct DiscriminatorConfig {
  Index input_channels = 3;
  Index condition_channels = 0;
  std::vector<Index> layer_filters{64, 128, 256, 512};
  std::vector<Index> layer_strides{2, 2, 2, 1};
  double leaky_slope = 0.2;

  void validate() const;
  /// Ck-Ck-... notation.
  std::string describe() const;
  Index total_input_channels() const { return input_channels + condition_channels; }
  bool operator==(const DiscriminatorConfig&) const = default;
};

/// Versioned key-value architecture descriptors, stored in checkpoints.
inline constexpr int kArchitectureDescriptorVersion = 1;
using KeyValues = std::map<std::string, std::string>;

KeyValues to_key_values(const GeneratorConfig& config, const std::string& prefix);
KeyValues to_key_values(const DiscriminatorConfig& config, const std::string& prefix);
GeneratorConfig generator_config_from(const KeyValues& kv, const std::string& prefix);
DiscriminatorConfig discriminator_config_from(const KeyValues& kv, const std::string& prefix);

std::string join_counts(const std::vector<Index>& values, char sep = ',');
std::vector<Index> parse_counts(const std::string& text);

}  // namespace hybridgan
