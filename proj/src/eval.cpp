#include "hybridgan/eval.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace hybridgan {

namespace fs = std::filesystem;

LabelMap quantize_labels(const RgbImage& image, const LabelPalette& palette) {
  palette.validate();
  LabelMap m{image.width, image.height, std::vector<int>(static_cast<std::size_t>(image.width) * image.height)};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      int best = 0;
      int arg = -1;
      for (std::size_t k = 0; k < palette.size(); ++k) {
        int d = 0;
        for (int c = 0; c < 3; ++c) {
          const int diff = int(image.at(x, y, c)) - int(palette.entries[k].color[c]);
          d += diff * diff;
        }
        if (arg < 0 || d < best) {
          best = d;
          arg = static_cast<int>(k);
        }
      }
      m.labels[static_cast<std::size_t>(y) * image.width + x] = arg;
    }
  return m;
}

RgbImage render_label_map(const LabelMap& map, const LabelPalette& palette) {
  RgbImage im(map.width, map.height);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const auto& color = palette.entries.at(map.at(x, y)).color;
      for (int c = 0; c < 3; ++c) im.at(x, y, c) = color[c];
    }
  return im;
}

void ConfusionMatrix::accumulate(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.width != truth.width || predicted.height != truth.height) {
    throw ValidationError("label maps differ in size: " + std::to_string(predicted.width) + "x" +
                          std::to_string(predicted.height) + " vs " + std::to_string(truth.width) + "x" +
                          std::to_string(truth.height));
  }
  const auto k = static_cast<int>(classes());
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    const int t = truth.labels[i];
    const int p = predicted.labels[i];
    if (t < 0 || t >= k || p < 0 || p >= k) {
      throw ValidationError("class id out of range 0.." + std::to_string(k - 1) + ": truth " + std::to_string(t) +
                            ", predicted " + std::to_string(p));
    }
  }
  for (std::size_t i = 0; i < truth.labels.size(); ++i) ++counts_(truth.labels[i], predicted.labels[i]);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes() != classes()) throw ValidationError("cannot merge confusion matrices of different sizes");
  counts_ += other.counts_;
}

ConfusionMatrix ConfusionMatrix::from_counts(const Counts& counts) {
  if (counts.rows() != counts.cols()) throw ValidationError("confusion matrix must be square");
  if ((counts.array() < 0).any()) throw ValidationError("confusion counts must be nonnegative");
  ConfusionMatrix cm(static_cast<std::size_t>(counts.rows()));
  cm.counts_ = counts;
  return cm;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& predicted, const LabelMap& truth) {
  cm.accumulate(predicted, truth);
  return cm;
}

SegmentationMetrics metrics(const ConfusionMatrix& cm) {
  if (cm.classes() == 0 || cm.total() == 0) throw ValidationError("metrics of an empty confusion matrix");
  const auto& n = cm.counts();
  SegmentationMetrics m;
  m.pixel_accuracy = static_cast<double>(n.diagonal().sum()) / static_cast<double>(n.sum());
  double acc_sum = 0, iu_sum = 0;
  int acc_classes = 0, iu_classes = 0;
  for (Eigen::Index i = 0; i < n.rows(); ++i) {
    const double nii = static_cast<double>(n(i, i));
    const double ti = static_cast<double>(n.row(i).sum());
    const double pi = static_cast<double>(n.col(i).sum());
    if (ti > 0) {
      acc_sum += nii / ti;
      ++acc_classes;
    }
    if (ti + pi - nii > 0) {
      iu_sum += nii / (ti + pi - nii);
      ++iu_classes;
    }
  }
  m.mean_accuracy = acc_sum / acc_classes;
  m.mean_iu = iu_sum / iu_classes;
  return m;
}

std::vector<LabelMap> CommandSegmenter::segment(const std::vector<std::pair<std::string, RgbImage>>& images,
                                                const LabelPalette& palette) {
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("hybridgan-seg-" + std::to_string(rd()));
  const fs::path in_dir = root / "in";
  const fs::path out_dir = root / "out";
  fs::create_directories(in_dir);
  fs::create_directories(out_dir);
  for (const auto& [name, image] : images) write_png(in_dir / (name + ".png"), image);
  const std::string cmd = command_ + " '" + in_dir.string() + "' '" + out_dir.string() + "'";
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    fs::remove_all(root);
    throw IoError("segmenter command failed with status " + std::to_string(status) + ": " + cmd);
  }
  std::vector<LabelMap> out;
  try {
    for (const auto& [name, image] : images) out.push_back(quantize_labels(read_png(out_dir / (name + ".png")), palette));
  } catch (...) {
    fs::remove_all(root);
    throw;
  }
  fs::remove_all(root);
  return out;
}

const char* to_string(EvalDirection d) {
  return d == EvalDirection::photo_to_label ? "photo_to_label" : "label_to_photo";
}

EvalDirection eval_direction_from(const std::string& name) {
  if (name == "photo_to_label") return EvalDirection::photo_to_label;
  if (name == "label_to_photo") return EvalDirection::label_to_photo;
  throw ConfigError("unknown evaluation direction '" + name + "'");
}

EvalReport evaluate_translation(const Translator& translate, const DatasetManifest& manifest,
                                const std::optional<LabelPalette>& palette, EvalDirection direction,
                                Segmenter* segmenter, const EvalOptions& options) {
  if (!palette) throw ConfigError(std::string(to_string(direction)) + " evaluation requires a label palette");
  palette->validate();
  if (direction == EvalDirection::label_to_photo && segmenter == nullptr) {
    throw ConfigError("label_to_photo evaluation requires a segmenter");
  }
  if (manifest.paired.empty()) throw ValidationError("evaluation needs aligned pairs in the manifest");
  if (options.grid_dir) fs::create_directories(*options.grid_dir);

  EvalReport report;
  report.direction = direction;
  report.confusion = ConfusionMatrix(palette->size());
  for (const auto& e : palette->entries) report.class_names.push_back(e.name);

  std::vector<std::string> names;
  std::vector<LabelMap> truths;
  std::vector<std::array<RgbImage, 3>> grid_rows;
  std::vector<std::pair<std::string, RgbImage>> to_segment;
  std::vector<LabelMap> predictions;
  for (const auto& pair : manifest.paired) {
    const std::string name = pair.x.stem().string();
    const Tensor<float> label = preprocess_eval(read_png(pair.x), options.preprocess, ImageKind::label);
    const Tensor<float> photo = preprocess_eval(read_png(pair.y), options.preprocess, ImageKind::photo);
    const float lo = options.preprocess.normalize_min;
    const float hi = options.preprocess.normalize_max;
    LabelMap truth = quantize_labels(label, *palette, lo, hi).front();
    const Tensor<float>& input = direction == EvalDirection::photo_to_label ? photo : label;
    const Tensor<float> output = translate(input);
    const RgbImage output_rgb = tensor_to_rgb(output, 0, lo, hi);
    if (direction == EvalDirection::photo_to_label) {
      predictions.push_back(quantize_labels(output, *palette, lo, hi).front());
    } else {
      to_segment.emplace_back(name, output_rgb);
    }
    if (options.grid_dir) {
      grid_rows.push_back({tensor_to_rgb(input, 0, lo, hi), output_rgb,
                           tensor_to_rgb(direction == EvalDirection::photo_to_label ? label : photo, 0, lo, hi)});
    }
    names.push_back(name);
    truths.push_back(std::move(truth));
  }
  if (direction == EvalDirection::label_to_photo) {
    predictions = segmenter->segment(to_segment, *palette);
    if (predictions.size() != truths.size()) throw IoError("segmenter returned the wrong number of label maps");
  }
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ConfusionMatrix single(palette->size());
    single.accumulate(predictions[i], truths[i]);
    report.confusion.merge(single);
    report.records.push_back({names[i], metrics(single).pixel_accuracy});
    if (options.grid_dir) {
      write_png(*options.grid_dir / (names[i] + ".png"),
                hconcat({grid_rows[i][0], grid_rows[i][1], grid_rows[i][2]}));
    }
  }
  report.images = truths.size();
  report.metrics = metrics(report.confusion);
  return report;
}

void write_metrics_report(const EvalReport& report, std::ostream& out) {
  out << std::setprecision(6) << std::fixed;
  out << "direction=" << to_string(report.direction) << '\n';
  out << "images=" << report.images << '\n';
  out << "pixel_accuracy=" << report.metrics.pixel_accuracy << '\n';
  out << "mean_accuracy=" << report.metrics.mean_accuracy << '\n';
  out << "mean_iu=" << report.metrics.mean_iu << '\n';
  const auto& n = report.confusion.counts();
  for (Eigen::Index i = 0; i < n.rows(); ++i) {
    out << "confusion." << i << '=';
    for (Eigen::Index j = 0; j < n.cols(); ++j) out << (j ? " " : "") << n(i, j);
    out << '\n';
  }
  for (std::size_t i = 0; i < report.class_names.size(); ++i) out << "class." << i << '=' << report.class_names[i] << '\n';
  for (const auto& r : report.records) out << "image." << r.name << ".pixel_accuracy=" << r.pixel_accuracy << '\n';
  out << std::setprecision(3);
  out << "#\n";
  out << "# | Pixel Acc. | Mean Acc. | Mean IU |\n";
  out << "# |-----------:|----------:|--------:|\n";
  out << "# | " << std::setw(10) << report.metrics.pixel_accuracy << " | " << std::setw(9)
      << report.metrics.mean_accuracy << " | " << std::setw(7) << report.metrics.mean_iu << " |\n";
}

void write_metrics_report(const EvalReport& report, const fs::path& path) {
  std::ofstream out(path);
  write_metrics_report(report, out);
  if (!out) throw IoError("cannot write metrics report '" + path.string() + "'");
}

}  // namespace hybridgan
