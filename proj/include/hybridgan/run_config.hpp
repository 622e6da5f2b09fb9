#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hybridgan/data.hpp"
#include "hybridgan/training.hpp"

namespace hybridgan {

/// Everything a training run needs. Omitted keys keep their defaults.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  PreprocessConfig preprocess;
  TrainConfig train;
  ModelSpec model;
  bool keep_epoch_checkpoints = false;

  void validate() const;
};

/// Reads an INI file (sections run, data, model, generator, discriminator,
/// train, loss, optimizer) and applies "section.key=value" overrides on top.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides = {});
/// Sets one dotted key; throws ConfigError for unknown keys or bad values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
/// Fully resolved INI text; loading it back yields the same config.
std::string render_run_config(const RunConfig& config);

}  // namespace hybridgan
