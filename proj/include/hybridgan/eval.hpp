#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hybridgan/data.hpp"
#include "hybridgan/errors.hpp"
#include "hybridgan/generator.hpp"
#include "hybridgan/image_io.hpp"
#include "hybridgan/palette.hpp"

namespace hybridgan {

/// Per-pixel class ids, row-major.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

/// Nearest palette color in Euclidean RGB distance; ties go to the lower id.
LabelMap quantize_labels(const RgbImage& image, const LabelPalette& palette);

/// Tensor form: values on [lo, hi] are compared against palette colors mapped
/// onto the same interval. One map per batch sample.
template <typename Scalar>
std::vector<LabelMap> quantize_labels(const Tensor<Scalar>& images, const LabelPalette& palette, double lo = -1.0,
                                      double hi = 1.0) {
  palette.validate();
  if (images.channels() != 3) throw ShapeError("quantize_labels expects 3 channels, got " + images.shape().str());
  std::vector<std::array<double, 3>> colors;
  for (const auto& e : palette.entries) {
    colors.push_back({});
    for (int c = 0; c < 3; ++c) colors.back()[c] = lo + (hi - lo) * e.color[c] / 255.0;
  }
  std::vector<LabelMap> out;
  for (Index n = 0; n < images.batch(); ++n) {
    LabelMap m{static_cast<int>(images.width()), static_cast<int>(images.height()), {}};
    m.labels.resize(static_cast<std::size_t>(m.width) * m.height);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        double best = 0;
        int arg = -1;
        for (std::size_t k = 0; k < colors.size(); ++k) {
          double d = 0;
          for (int c = 0; c < 3; ++c) {
            const double diff = static_cast<double>(images(n, c, y, x)) - colors[k][c];
            d += diff * diff;
          }
          if (arg < 0 || d < best) {
            best = d;
            arg = static_cast<int>(k);
          }
        }
        m.labels[static_cast<std::size_t>(y) * m.width + x] = arg;
      }
    out.push_back(std::move(m));
  }
  return out;
}

/// Renders class ids back to palette colors.
RgbImage render_label_map(const LabelMap& map, const LabelPalette& palette);

/// counts(i, j): pixels of true class i predicted as class j.
class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ConfusionMatrix(std::size_t classes = 0) : counts_(Counts::Zero(classes, classes)) {}

  std::size_t classes() const { return static_cast<std::size_t>(counts_.rows()); }
  const Counts& counts() const { return counts_; }
  std::int64_t operator()(std::size_t truth, std::size_t predicted) const { return counts_(truth, predicted); }
  std::int64_t total() const { return counts_.sum(); }

  void accumulate(const LabelMap& predicted, const LabelMap& truth);
  void merge(const ConfusionMatrix& other);
  /// Builds a matrix from explicit counts (row = truth).
  static ConfusionMatrix from_counts(const Counts& counts);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Counts counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& predicted, const LabelMap& truth);

struct SegmentationMetrics {
  double pixel_accuracy = 0;
  double mean_accuracy = 0;
  double mean_iu = 0;
};

/// Class means run over classes with a nonzero denominator only.
SegmentationMetrics metrics(const ConfusionMatrix& cm);

/// External segmentation hook for scoring generated photos.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// Returns one label map per named image.
  virtual std::vector<LabelMap> segment(const std::vector<std::pair<std::string, RgbImage>>& images,
                                        const LabelPalette& palette) = 0;
};

/// Runs `command <in_dir> <out_dir>`; the command must write same-named PNG
/// label maps in palette colors, which are then quantized.
class CommandSegmenter : public Segmenter {
 public:
  explicit CommandSegmenter(std::string command) : command_(std::move(command)) {}
  std::vector<LabelMap> segment(const std::vector<std::pair<std::string, RgbImage>>& images,
                                const LabelPalette& palette) override;

 private:
  std::string command_;
};

enum class EvalDirection { photo_to_label, label_to_photo };

const char* to_string(EvalDirection d);
EvalDirection eval_direction_from(const std::string& name);

/// Maps a preprocessed (1, C, H, W) image to the generator output.
using Translator = std::function<Tensor<float>(const Tensor<float>&)>;

struct ImageRecord {
  std::string name;
  double pixel_accuracy = 0;
};

struct EvalReport {
  EvalDirection direction = EvalDirection::photo_to_label;
  std::size_t images = 0;
  ConfusionMatrix confusion;
  SegmentationMetrics metrics;
  std::vector<ImageRecord> records;
  std::vector<std::string> class_names;
};

struct EvalOptions {
  PreprocessConfig preprocess;
  std::optional<std::filesystem::path> grid_dir;  // input | output | ground truth PNGs
};

/// Scores a translator over the manifest's aligned pairs. The X domain is
/// the label domain: photo_to_label translates y and compares with x,
/// label_to_photo translates x and segments the result.
EvalReport evaluate_translation(const Translator& translate, const DatasetManifest& manifest,
                                const std::optional<LabelPalette>& palette, EvalDirection direction,
                                Segmenter* segmenter, const EvalOptions& options = {});

template <typename Scalar>
Translator generator_translator(const NetworkParameters<Scalar>& generator) {
  return [&generator](const Tensor<float>& x) {
    if constexpr (std::is_same_v<Scalar, float>) {
      return generator_forward(generator, x);
    } else {
      return generator_forward(generator, x.template cast<Scalar>()).template cast<float>();
    }
  };
}

template <typename Scalar>
EvalReport evaluate_translation(const NetworkParameters<Scalar>& generator, const DatasetManifest& manifest,
                                const std::optional<LabelPalette>& palette, EvalDirection direction,
                                Segmenter* segmenter, const EvalOptions& options = {}) {
  return evaluate_translation(generator_translator(generator), manifest, palette, direction, segmenter, options);
}

/// key=value lines followed by a commented table with the columns
/// "Pixel Acc.", "Mean Acc." and "Mean IU".
void write_metrics_report(const EvalReport& report, std::ostream& out);
void write_metrics_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace hybridgan
