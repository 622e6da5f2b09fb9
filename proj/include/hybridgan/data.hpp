#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hybridgan/image_io.hpp"
#include "hybridgan/palette.hpp"
#include "hybridgan/tensor.hpp"

namespace hybridgan {

enum class Phase { paired, unpaired };

inline const char* to_string(Phase p) { return p == Phase::paired ? "paired" : "unpaired"; }

struct PairedEntry {
  std::filesystem::path x;
  std::filesystem::path y;

  bool operator==(const PairedEntry&) const = default;
};

struct DatasetManifest {
  std::vector<PairedEntry> paired;
  std::vector<std::filesystem::path> unpaired_x;
  std::vector<std::filesystem::path> unpaired_y;
  std::optional<LabelPalette> palette;  // colors of the X (label) domain

  std::size_t num_paired() const { return paired.size(); }
  std::size_t num_unpaired_x() const { return unpaired_x.size(); }
  std::size_t num_unpaired_y() const { return unpaired_y.size(); }
  /// Throws ValidationError when the manifest holds no samples at all.
  void validate() const;

  bool operator==(const DatasetManifest&) const = default;
};

/// Parses manifest text. Relative paths are resolved against `base_dir`.
/// Sections: [palette] (id, r, g, b, name), [paired] (x, y), [unpaired_x],
/// [unpaired_y]; fields are tab-separated, '#' starts a comment line.
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
/// Reads and parses a manifest and checks that every listed file exists.
DatasetManifest load_manifest(const std::filesystem::path& path);
/// Writes paths relative to the manifest's directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Whether `epoch` (1-based) trains on aligned pairs.
Phase phase_for_epoch(const DatasetManifest& manifest, int epoch, int paired_epochs);

enum class ImageKind { photo, label };

struct PreprocessConfig {
  int load_size = 286;
  int crop_size = 256;
  float normalize_min = -1.f;
  float normalize_max = 1.f;
  Interpolation interpolation = Interpolation::bicubic;  // photographs; label maps always use nearest
  bool random_flip = false;

  void validate() const;
};

/// Resizes to load_size², crops crop_size² at offsets drawn from `rng` and
/// maps 0..255 linearly onto the normalization interval. Returns (1, 3, crop, crop).
Tensor<float> preprocess(const RgbImage& image, const PreprocessConfig& config, std::mt19937_64& rng,
                         ImageKind kind = ImageKind::photo);
/// Same for an aligned pair: both images get the same crop (and flip).
std::pair<Tensor<float>, Tensor<float>> preprocess_pair(const RgbImage& x, const RgbImage& y,
                                                        const PreprocessConfig& config, std::mt19937_64& rng,
                                                        ImageKind x_kind, ImageKind y_kind);
/// Evaluation preprocessing: resize straight to crop_size², no crop.
Tensor<float> preprocess_eval(const RgbImage& image, const PreprocessConfig& config,
                              ImageKind kind = ImageKind::photo);

/// One training sample; `aligned` marks a ground-truth pair.
struct Sample {
  std::filesystem::path x;
  std::filesystem::path y;
  bool aligned = false;

  bool operator==(const Sample&) const = default;
};

/// Sample order of one epoch. Paired: N shuffled pairs. Unpaired:
/// max(M_X', M_Y') tuples from two independent shuffles, the shorter side
/// wrapping around. With `reuse_paired` the paired images join both
/// unpaired sides.
std::vector<Sample> iterate_epoch(const DatasetManifest& manifest, Phase phase, std::mt19937_64& rng,
                                  bool reuse_paired = true);

enum class SyntheticTask { color_inversion, region_texture };

const char* to_string(SyntheticTask task);
SyntheticTask synthetic_task_from(const std::string& name);

struct SyntheticTaskSpec {
  int resolution = 32;
  int num_paired = 10;
  int num_unpaired = 190;
  int num_test = 0;  // held-out aligned pairs, written to test_manifest.txt
  SyntheticTask task = SyntheticTask::color_inversion;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Palette of the region_texture label domain.
LabelPalette region_palette();
/// Random smooth blobs on a dark background.
RgbImage synthetic_blobs(int resolution, std::mt19937_64& rng);
/// Per-channel 255 - v, i.e. exact negation after [-1, 1] normalization.
RgbImage invert_colors(const RgbImage& image);
/// Class-id map of a random Voronoi partition using all palette classes.
std::vector<int> synthetic_regions(int resolution, std::mt19937_64& rng);
RgbImage render_labels(const std::vector<int>& labels, int resolution, const LabelPalette& palette);
/// Fills each region with its class's fixed procedural texture.
RgbImage render_textures(const std::vector<int>& labels, int resolution);
/// Inverse of render_textures: class of the nearest texture tone per pixel.
std::vector<int> texture_labels(const RgbImage& image);

/// Writes x/, y/, manifest.txt, synthetic.txt (and test_manifest.txt) under `out_dir`.
DatasetManifest generate_synthetic(const SyntheticTaskSpec& spec, const std::filesystem::path& out_dir);

}  // namespace hybridgan
