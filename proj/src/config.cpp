#include "hybridgan/config.hpp"

#include <sstream>

namespace hybridgan {

namespace {

void require_positive(Index value, const char* field) {
  if (value < 1) throw ConfigError(std::string(field) + " must be >= 1, got " + std::to_string(value));
}

const std::string& lookup(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CompatibilityError("architecture descriptor lacks key '" + key + "'");
  return it->second;
}

Index lookup_count(const KeyValues& kv, const std::string& key) {
  const std::string& text = lookup(kv, key);
  try {
    return static_cast<Index>(std::stoll(text));
  } catch (const std::exception&) {
    throw CompatibilityError("descriptor key '" + key + "' is not an integer: " + text);
  }
}

void check_descriptor_version(const KeyValues& kv, const std::string& prefix) {
  if (lookup_count(kv, prefix + "descriptor_version") != kArchitectureDescriptorVersion) {
    throw CompatibilityError("unsupported architecture descriptor version for " + prefix);
  }
}

}  // namespace

void GeneratorConfig::validate() const {
  require_positive(input_channels, "input_channels");
  require_positive(output_channels, "output_channels");
  require_positive(base_filters, "base_filters");
  require_positive(num_resblocks, "num_resblocks");
}

std::string GeneratorConfig::describe() const {
  std::ostringstream os;
  const Index f = base_filters;
  os << "c7s1-" << f << ",d" << 2 * f << ",d" << 4 * f;
  for (Index i = 0; i < num_resblocks; ++i) os << ",R" << 4 * f;
  os << ",u" << 2 * f << ",u" << f << ",c7s1-" << output_channels;
  return os.str();
}

void DiscriminatorConfig::validate() const {
  require_positive(input_channels, "input_channels");
  if (condition_channels < 0) throw ConfigError("condition_channels must be >= 0");
  if (layer_filters.empty()) throw ConfigError("layer_filters must not be empty");
  if (layer_strides.size() != layer_filters.size()) {
    throw ConfigError("layer_strides must have one entry per layer_filters entry (" +
                      std::to_string(layer_filters.size()) + "), got " +
                      std::to_string(layer_strides.size()));
  }
  for (Index f : layer_filters) require_positive(f, "layer_filters");
  for (Index s : layer_strides) require_positive(s, "layer_strides");
  if (!(leaky_slope >= 0.0)) throw ConfigError("leaky_slope must be >= 0");
}

std::string DiscriminatorConfig::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < layer_filters.size(); ++i) os << (i ? "-" : "") << "C" << layer_filters[i];
  return os.str();
}

std::string join_counts(const std::vector<Index>& values, char sep) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? std::string(1, sep) : "") << values[i];
  return os.str();
}

std::vector<Index> parse_counts(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(static_cast<Index>(std::stoll(item)));
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  return out;
}

KeyValues to_key_values(const GeneratorConfig& c, const std::string& prefix) {
  return {
      {prefix + "descriptor_version", std::to_string(kArchitectureDescriptorVersion)},
      {prefix + "kind", "generator"},
      {prefix + "input_channels", std::to_string(c.input_channels)},
      {prefix + "output_channels", std::to_string(c.output_channels)},
      {prefix + "base_filters", std::to_string(c.base_filters)},
      {prefix + "num_resblocks", std::to_string(c.num_resblocks)},
      {prefix + "norm", "instance"},
      {prefix + "padding", "reflection"},
  };
}

KeyValues to_key_values(const DiscriminatorConfig& c, const std::string& prefix) {
  std::ostringstream slope;
  slope.precision(17);
  slope << c.leaky_slope;
  return {
      {prefix + "descriptor_version", std::to_string(kArchitectureDescriptorVersion)},
      {prefix + "kind", "discriminator"},
      {prefix + "input_channels", std::to_string(c.input_channels)},
      {prefix + "condition_channels", std::to_string(c.condition_channels)},
      {prefix + "layer_filters", join_counts(c.layer_filters)},
      {prefix + "layer_strides", join_counts(c.layer_strides)},
      {prefix + "leaky_slope", slope.str()},
  };
}

GeneratorConfig generator_config_from(const KeyValues& kv, const std::string& prefix) {
  check_descriptor_version(kv, prefix);
  if (lookup(kv, prefix + "kind") != "generator") throw CompatibilityError(prefix + " is not a generator");
  GeneratorConfig c;
  c.input_channels = lookup_count(kv, prefix + "input_channels");
  c.output_channels = lookup_count(kv, prefix + "output_channels");
  c.base_filters = lookup_count(kv, prefix + "base_filters");
  c.num_resblocks = lookup_count(kv, prefix + "num_resblocks");
  c.validate();
  return c;
}

DiscriminatorConfig discriminator_config_from(const KeyValues& kv, const std::string& prefix) {
  check_descriptor_version(kv, prefix);
  if (lookup(kv, prefix + "kind") != "discriminator") {
    throw CompatibilityError(prefix + " is not a discriminator");
  }
  DiscriminatorConfig c;
  c.input_channels = lookup_count(kv, prefix + "input_channels");
  c.condition_channels = lookup_count(kv, prefix + "condition_channels");
  c.layer_filters = parse_counts(lookup(kv, prefix + "layer_filters"));
  c.layer_strides = parse_counts(lookup(kv, prefix + "layer_strides"));
  c.leaky_slope = std::stod(lookup(kv, prefix + "leaky_slope"));
  c.validate();
  return c;
}

}  // namespace hybridgan
