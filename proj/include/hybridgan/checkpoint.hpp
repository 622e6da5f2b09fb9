#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "hybridgan/config.hpp"
#include "hybridgan/training.hpp"

namespace hybridgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Untyped checkpoint contents. File layout: "HGCK", u32 version, u8 scalar
/// size, key=value metadata block, named-tensor table, CRC-32 trailer over
/// all preceding bytes. Integers are little-endian.
struct CheckpointFile {
  struct Entry {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<char> bytes;
  };
  std::uint8_t scalar_bytes = 4;
  KeyValues metadata;
  std::vector<Entry> tensors;

  const Entry& find(const std::string& name) const;
};

/// Writes through a temporary file and renames, so a crash never leaves a
/// truncated checkpoint behind.
void write_checkpoint_file(const CheckpointFile& file, const std::filesystem::path& path);
/// Checks the version before the checksum.
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

namespace detail {

template <typename Scalar>
void put_tensor(CheckpointFile& f, std::string name, std::vector<std::int64_t> shape, const Scalar* data,
                std::size_t count) {
  CheckpointFile::Entry e{std::move(name), std::move(shape), std::vector<char>(count * sizeof(Scalar))};
  std::memcpy(e.bytes.data(), data, e.bytes.size());
  f.tensors.push_back(std::move(e));
}

template <typename Scalar>
void get_values(const CheckpointFile::Entry& e, const std::vector<std::int64_t>& shape, Scalar* out,
                std::size_t count) {
  if (e.shape != shape || e.bytes.size() != count * sizeof(Scalar)) {
    throw CompatibilityError("tensor '" + e.name + "' has an unexpected shape");
  }
  std::memcpy(out, e.bytes.data(), e.bytes.size());
}

template <typename Scalar>
void put_image(CheckpointFile& f, const std::string& name, const Tensor<Scalar>& t) {
  const Shape4& s = t.shape();
  put_tensor(f, name, {s.n, s.c, s.h, s.w}, t.values().data(), static_cast<std::size_t>(t.size()));
}

template <typename Scalar>
Tensor<Scalar> get_image(const CheckpointFile& f, const std::string& name) {
  const auto& e = f.find(name);
  if (e.shape.size() != 4) throw CompatibilityError("tensor '" + name + "' is not 4-D");
  Tensor<Scalar> t(e.shape[0], e.shape[1], e.shape[2], e.shape[3]);
  get_values(e, e.shape, t.values().data(), static_cast<std::size_t>(t.size()));
  return t;
}

inline const std::string& meta(const CheckpointFile& f, const std::string& key) {
  const auto it = f.metadata.find(key);
  if (it == f.metadata.end()) throw CompatibilityError("checkpoint lacks metadata key '" + key + "'");
  return it->second;
}

inline long long meta_int(const CheckpointFile& f, const std::string& key) {
  try {
    return std::stoll(meta(f, key));
  } catch (const std::logic_error&) {
    throw CompatibilityError("metadata key '" + key + "' is not an integer");
  }
}

}  // namespace detail

template <typename Scalar>
CheckpointFile to_checkpoint_file(const TrainState<Scalar>& st) {
  CheckpointFile f;
  f.scalar_bytes = sizeof(Scalar);
  auto& m = f.metadata;
  m["architecture_version"] = std::to_string(kArchitectureDescriptorVersion);
  m["epoch"] = std::to_string(st.epoch);
  m["step"] = std::to_string(st.step);
  m["phase"] = to_string(st.phase);
  m["model.x_channels"] = std::to_string(st.model.x_channels);
  m["model.y_channels"] = std::to_string(st.model.y_channels);
  m.merge(to_key_values(st.model.generator, "model.generator."));
  m.merge(to_key_values(st.model.discriminator, "model.discriminator."));
  std::ostringstream rng;
  rng << st.rng;
  m["rng"] = rng.str();
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string net = kNetworkNames[i];
    m["adam." + net + ".steps"] = std::to_string(st.optimizers[i].steps);
    const auto& weights = st.networks[i].weights;
    for (std::size_t w = 0; w < weights.size(); ++w) {
      const auto& t = weights[w];
      const std::vector<std::int64_t> shape(t.shape.begin(), t.shape.end());
      const auto count = static_cast<std::size_t>(t.values.size());
      detail::put_tensor(f, "net/" + net + "/" + t.name, shape, t.values.data(), count);
      detail::put_tensor(f, "adam/" + net + "/m/" + t.name, shape, st.optimizers[i].first_moment[w].data(), count);
      detail::put_tensor(f, "adam/" + net + "/v/" + t.name, shape, st.optimizers[i].second_moment[w].data(), count);
    }
  }
  for (std::size_t p = 0; p < 4; ++p) {
    const std::string pool = kNetworkNames[D1 + p];
    m["pool." + pool + ".capacity"] = std::to_string(st.pools[p].capacity());
    m["pool." + pool + ".size"] = std::to_string(st.pools[p].size());
    const auto& entries = st.pools[p].entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string base = "pool/" + pool + "/" + std::to_string(k);
      detail::put_image(f, base + "/image", entries[k].image);
      if (entries[k].condition) detail::put_image(f, base + "/condition", *entries[k].condition);
    }
  }
  return f;
}

template <typename Scalar>
TrainState<Scalar> from_checkpoint_file(const CheckpointFile& f) {
  if (f.scalar_bytes != sizeof(Scalar)) {
    throw CompatibilityError("checkpoint stores " + std::to_string(f.scalar_bytes) + "-byte scalars, expected " +
                             std::to_string(sizeof(Scalar)));
  }
  if (detail::meta_int(f, "architecture_version") != kArchitectureDescriptorVersion) {
    throw CompatibilityError("unsupported architecture descriptor version " + detail::meta(f, "architecture_version"));
  }
  TrainState<Scalar> st;
  st.epoch = static_cast<int>(detail::meta_int(f, "epoch"));
  st.step = detail::meta_int(f, "step");
  const std::string& phase = detail::meta(f, "phase");
  if (phase != "paired" && phase != "unpaired") throw CompatibilityError("unknown phase '" + phase + "'");
  st.phase = phase == "paired" ? Phase::paired : Phase::unpaired;
  st.model.x_channels = detail::meta_int(f, "model.x_channels");
  st.model.y_channels = detail::meta_int(f, "model.y_channels");
  st.model.generator = generator_config_from(f.metadata, "model.generator.");
  st.model.discriminator = discriminator_config_from(f.metadata, "model.discriminator.");
  std::istringstream rng(detail::meta(f, "rng"));
  rng >> st.rng;
  if (!rng) throw CompatibilityError("cannot restore the random generator state");

  for (std::size_t i = 0; i < 6; ++i) {
    const std::string net = kNetworkNames[i];
    const NetworkPlan plan = i < 2 ? generator_plan(i == G1 ? st.model.g1() : st.model.g2())
                                   : discriminator_plan(st.model.discriminator_for(static_cast<NetworkId>(i)));
    ArchitectureConfig config = i < 2 ? ArchitectureConfig(i == G1 ? st.model.g1() : st.model.g2())
                                      : ArchitectureConfig(st.model.discriminator_for(static_cast<NetworkId>(i)));
    auto& params = st.networks[i];
    params.config = std::move(config);
    for (const ConvUnit* u : plan.units()) {
      params.weights.push_back({u->name + ".weight", u->weight_shape(), {}});
      params.weights.push_back({u->name + ".bias", {u->out_channels}, {}});
    }
    auto& adam = st.optimizers[i];
    adam.steps = detail::meta_int(f, "adam." + net + ".steps");
    for (auto& t : params.weights) {
      Index count = 1;
      for (Index d : t.shape) count *= d;
      const std::vector<std::int64_t> shape(t.shape.begin(), t.shape.end());
      t.values.resize(count);
      adam.first_moment.emplace_back(count);
      adam.second_moment.emplace_back(count);
      const auto n = static_cast<std::size_t>(count);
      detail::get_values(f.find("net/" + net + "/" + t.name), shape, t.values.data(), n);
      detail::get_values(f.find("adam/" + net + "/m/" + t.name), shape, adam.first_moment.back().data(), n);
      detail::get_values(f.find("adam/" + net + "/v/" + t.name), shape, adam.second_moment.back().data(), n);
    }
  }
  for (std::size_t p = 0; p < 4; ++p) {
    const std::string pool = kNetworkNames[D1 + p];
    const bool conditional = p >= 2;
    st.pools[p] = ImagePool<Scalar>(static_cast<std::size_t>(detail::meta_int(f, "pool." + pool + ".capacity")));
    std::vector<PoolEntry<Scalar>> entries;
    const auto size = detail::meta_int(f, "pool." + pool + ".size");
    for (long long k = 0; k < size; ++k) {
      const std::string base = "pool/" + pool + "/" + std::to_string(k);
      PoolEntry<Scalar> e{detail::get_image<Scalar>(f, base + "/image"), std::nullopt};
      if (conditional) e.condition = detail::get_image<Scalar>(f, base + "/condition");
      entries.push_back(std::move(e));
    }
    st.pools[p].restore(std::move(entries));
  }
  return st;
}

template <typename Scalar>
void save_checkpoint(const TrainState<Scalar>& state, const std::filesystem::path& path) {
  write_checkpoint_file(to_checkpoint_file(state), path);
}

template <typename Scalar>
TrainState<Scalar> load_checkpoint(const std::filesystem::path& path) {
  return from_checkpoint_file<Scalar>(read_checkpoint_file(path));
}

}  // namespace hybridgan
