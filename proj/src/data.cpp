#include "hybridgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hybridgan/errors.hpp"

namespace hybridgan {

namespace fs = std::filesystem;

void LabelPalette::validate() const {
  if (entries.empty()) throw ConfigError("label palette is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].class_id != static_cast<int>(i)) {
      throw ConfigError("palette class ids must run 0..K-1 in order; entry " + std::to_string(i) + " has id " +
                        std::to_string(entries[i].class_id));
    }
    for (std::size_t j = 0; j < i; ++j)
      if (entries[j].color == entries[i].color) {
        throw ConfigError("palette classes " + std::to_string(j) + " and " + std::to_string(i) + " share a color");
      }
  }
}

void DatasetManifest::validate() const {
  if (paired.empty() && unpaired_x.empty() && unpaired_y.empty()) {
    throw ValidationError("manifest lists no samples");
  }
  if (palette) palette->validate();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

int parse_int(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("manifest line " + std::to_string(line_no) + ": '" + s + "' is not an integer");
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  DatasetManifest m;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("manifest line " + std::to_string(line_no) + ": bad header");
      section = line.substr(1, line.size() - 2);
      if (section != "paired" && section != "unpaired_x" && section != "unpaired_y" && section != "palette") {
        throw ValidationError("manifest line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto fields = split_tabs(line);
    auto expect = [&](std::size_t n) {
      if (fields.size() != n) {
        throw ValidationError("manifest line " + std::to_string(line_no) + ": expected " + std::to_string(n) +
                              " tab-separated fields in [" + section + "], got " + std::to_string(fields.size()));
      }
    };
    if (section == "paired") {
      expect(2);
      m.paired.push_back({resolve(base_dir, fields[0]), resolve(base_dir, fields[1])});
    } else if (section == "unpaired_x") {
      expect(1);
      m.unpaired_x.push_back(resolve(base_dir, fields[0]));
    } else if (section == "unpaired_y") {
      expect(1);
      m.unpaired_y.push_back(resolve(base_dir, fields[0]));
    } else if (section == "palette") {
      expect(5);
      PaletteEntry e;
      e.class_id = parse_int(fields[0], line_no);
      for (int c = 0; c < 3; ++c) {
        const int v = parse_int(fields[1 + c], line_no);
        if (v < 0 || v > 255) throw ValidationError("manifest line " + std::to_string(line_no) + ": color out of range");
        e.color[c] = static_cast<std::uint8_t>(v);
      }
      e.name = fields[4];
      if (!m.palette) m.palette.emplace();
      m.palette->entries.push_back(std::move(e));
    } else {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": entry outside any section");
    }
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  DatasetManifest m = parse_manifest(buffer.str(), path.parent_path());

  std::vector<std::string> dangling;
  auto check = [&](const fs::path& p) {
    if (!fs::is_regular_file(p)) dangling.push_back(p.string());
  };
  for (const auto& e : m.paired) {
    check(e.x);
    check(e.y);
  }
  for (const auto& p : m.unpaired_x) check(p);
  for (const auto& p : m.unpaired_y) check(p);
  if (!dangling.empty()) {
    std::string msg = "manifest '" + path.string() + "' lists " + std::to_string(dangling.size()) + " missing file(s):";
    for (std::size_t i = 0; i < dangling.size() && i < 20; ++i) msg += " " + dangling[i];
    if (dangling.size() > 20) msg += " ...";
    throw ValidationError(msg);
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) {
    const fs::path r = p.lexically_relative(base);
    return (r.empty() || *r.begin() == "..") ? p.string() : r.string();
  };
  std::ostringstream out;
  out << "# hybridgan manifest\n";
  if (m.palette) {
    out << "[palette]\n";
    for (const auto& e : m.palette->entries) {
      out << e.class_id << '\t' << int(e.color[0]) << '\t' << int(e.color[1]) << '\t' << int(e.color[2]) << '\t'
          << e.name << '\n';
    }
  }
  out << "[paired]\n";
  for (const auto& e : m.paired) out << rel(e.x) << '\t' << rel(e.y) << '\n';
  out << "[unpaired_x]\n";
  for (const auto& p : m.unpaired_x) out << rel(p) << '\n';
  out << "[unpaired_y]\n";
  for (const auto& p : m.unpaired_y) out << rel(p) << '\n';
  std::ofstream file(path, std::ios::binary);
  file << out.str();
  if (!file) throw IoError("cannot write manifest '" + path.string() + "'");
}

Phase phase_for_epoch(const DatasetManifest& manifest, int epoch, int paired_epochs) {
  if (manifest.paired.empty()) return Phase::unpaired;
  if (epoch <= paired_epochs) return Phase::paired;
  if (manifest.unpaired_x.empty() && manifest.unpaired_y.empty()) return Phase::paired;
  return Phase::unpaired;
}

void PreprocessConfig::validate() const {
  if (crop_size < 4 || crop_size % 4 != 0) {
    throw ConfigError("crop_size must be a positive multiple of 4, got " + std::to_string(crop_size));
  }
  if (load_size < crop_size) {
    throw ConfigError("load_size (" + std::to_string(load_size) + ") must be >= crop_size (" +
                      std::to_string(crop_size) + ")");
  }
  if (!(normalize_max > normalize_min)) throw ConfigError("normalization interval is empty");
}

namespace {

Tensor<float> crop_normalize(const FloatImage& im, int oy, int ox, int size, bool flip, const PreprocessConfig& c) {
  Tensor<float> t(1, 3, size, size);
  const float span = c.normalize_max - c.normalize_min;
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const int sx = flip ? ox + size - 1 - x : ox + x;
        t(0, ch, y, x) = (im.at(ch, oy + y, sx) * span + 255.f * c.normalize_min) / 255.f;
      }
  return t;
}

struct CropDraw {
  int oy = 0;
  int ox = 0;
  bool flip = false;
};

CropDraw draw_crop(const PreprocessConfig& c, std::mt19937_64& rng) {
  CropDraw d;
  if (c.load_size > c.crop_size) {
    std::uniform_int_distribution<int> offset(0, c.load_size - c.crop_size);
    d.oy = offset(rng);
    d.ox = offset(rng);
  }
  if (c.random_flip) d.flip = std::bernoulli_distribution(0.5)(rng);
  return d;
}

Interpolation mode_for(const PreprocessConfig& c, ImageKind kind) {
  return kind == ImageKind::label ? Interpolation::nearest : c.interpolation;
}

}  // namespace

Tensor<float> preprocess(const RgbImage& image, const PreprocessConfig& config, std::mt19937_64& rng, ImageKind kind) {
  config.validate();
  const CropDraw d = draw_crop(config, rng);
  const FloatImage big = resize(to_float(image), config.load_size, config.load_size, mode_for(config, kind));
  return crop_normalize(big, d.oy, d.ox, config.crop_size, d.flip, config);
}

std::pair<Tensor<float>, Tensor<float>> preprocess_pair(const RgbImage& x, const RgbImage& y,
                                                        const PreprocessConfig& config, std::mt19937_64& rng,
                                                        ImageKind x_kind, ImageKind y_kind) {
  config.validate();
  const CropDraw d = draw_crop(config, rng);
  const FloatImage bx = resize(to_float(x), config.load_size, config.load_size, mode_for(config, x_kind));
  const FloatImage by = resize(to_float(y), config.load_size, config.load_size, mode_for(config, y_kind));
  return {crop_normalize(bx, d.oy, d.ox, config.crop_size, d.flip, config),
          crop_normalize(by, d.oy, d.ox, config.crop_size, d.flip, config)};
}

Tensor<float> preprocess_eval(const RgbImage& image, const PreprocessConfig& config, ImageKind kind) {
  config.validate();
  const FloatImage im = resize(to_float(image), config.crop_size, config.crop_size, mode_for(config, kind));
  return crop_normalize(im, 0, 0, config.crop_size, false, config);
}

std::vector<Sample> iterate_epoch(const DatasetManifest& m, Phase phase, std::mt19937_64& rng, bool reuse_paired) {
  std::vector<Sample> out;
  if (phase == Phase::paired) {
    if (m.paired.empty()) throw PhaseError("paired phase requested but the manifest has no pairs");
    std::vector<std::size_t> order(m.paired.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) out.push_back({m.paired[i].x, m.paired[i].y, true});
    return out;
  }
  std::vector<fs::path> xs = m.unpaired_x;
  std::vector<fs::path> ys = m.unpaired_y;
  if (reuse_paired) {
    for (const auto& e : m.paired) {
      xs.push_back(e.x);
      ys.push_back(e.y);
    }
  }
  if (xs.empty() || ys.empty()) {
    throw PhaseError("unpaired phase needs samples on both sides, got " + std::to_string(xs.size()) + " x and " +
                     std::to_string(ys.size()) + " y");
  }
  std::vector<std::size_t> px(xs.size()), py(ys.size());
  std::iota(px.begin(), px.end(), 0);
  std::iota(py.begin(), py.end(), 0);
  std::shuffle(px.begin(), px.end(), rng);
  std::shuffle(py.begin(), py.end(), rng);
  const std::size_t count = std::max(xs.size(), ys.size());
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({xs[px[i % xs.size()]], ys[py[i % ys.size()]], false});
  return out;
}

const char* to_string(SyntheticTask task) {
  return task == SyntheticTask::color_inversion ? "color_inversion" : "region_texture";
}

SyntheticTask synthetic_task_from(const std::string& name) {
  if (name == "color_inversion") return SyntheticTask::color_inversion;
  if (name == "region_texture") return SyntheticTask::region_texture;
  throw ConfigError("unknown synthetic task '" + name + "'");
}

void SyntheticTaskSpec::validate() const {
  if (resolution < 4 || resolution % 4 != 0) throw ValidationError("resolution must be a positive multiple of 4");
  if (num_paired < 0 || num_unpaired < 0 || num_test < 0) throw ValidationError("sample counts must be >= 0");
  if (num_paired + num_unpaired == 0) throw ValidationError("synthetic task needs at least one training sample");
}

LabelPalette region_palette() {
  return LabelPalette{{{0, {200, 40, 40}, "red_region"},
                       {1, {40, 200, 40}, "green_region"},
                       {2, {40, 40, 200}, "blue_region"}}};
}

RgbImage synthetic_blobs(int resolution, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<double, 3> background{};
  for (double& b : background) b = 10 + 30 * unit(rng);
  const int blobs = 3 + static_cast<int>(unit(rng) * 4);
  struct Blob {
    double cx, cy, sigma;
    std::array<double, 3> amp;
  };
  std::vector<Blob> list;
  for (int i = 0; i < blobs; ++i) {
    Blob b{unit(rng) * resolution, unit(rng) * resolution, resolution * (0.08 + 0.17 * unit(rng)), {}};
    for (double& a : b.amp) a = 40 + 170 * unit(rng);
    list.push_back(b);
  }
  RgbImage im(resolution, resolution);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = background[c];
        for (const Blob& b : list) {
          const double d2 = (x + 0.5 - b.cx) * (x + 0.5 - b.cx) + (y + 0.5 - b.cy) * (y + 0.5 - b.cy);
          v += b.amp[c] * std::exp(-d2 / (2 * b.sigma * b.sigma));
        }
        im.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return im;
}

RgbImage invert_colors(const RgbImage& image) {
  RgbImage out = image;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

std::vector<int> synthetic_regions(int resolution, std::mt19937_64& rng) {
  const int classes = static_cast<int>(region_palette().size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int seeds = classes + static_cast<int>(unit(rng) * 4);
  std::vector<std::array<double, 2>> points;
  std::vector<int> label;
  for (int i = 0; i < seeds; ++i) {
    points.push_back({unit(rng) * resolution, unit(rng) * resolution});
    label.push_back(i < classes ? i : static_cast<int>(unit(rng) * classes));
  }
  std::vector<int> out(static_cast<std::size_t>(resolution) * resolution);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      double best = 1e300;
      int arg = 0;
      for (int i = 0; i < seeds; ++i) {
        const double dx = x + 0.5 - points[i][0];
        const double dy = y + 0.5 - points[i][1];
        if (dx * dx + dy * dy < best) {
          best = dx * dx + dy * dy;
          arg = i;
        }
      }
      out[static_cast<std::size_t>(y) * resolution + x] = label[arg];
    }
  return out;
}

RgbImage render_labels(const std::vector<int>& labels, int resolution, const LabelPalette& palette) {
  RgbImage im(resolution, resolution);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      const auto& color = palette.entries.at(labels[static_cast<std::size_t>(y) * resolution + x]).color;
      for (int c = 0; c < 3; ++c) im.at(x, y, c) = color[c];
    }
  return im;
}

namespace {

constexpr std::array<std::array<std::array<std::uint8_t, 3>, 2>, 3> kTextureColors{{
    {{{60, 180, 70}, {30, 110, 40}}},    // horizontal stripes
    {{{70, 90, 210}, {30, 40, 130}}},    // checkerboard
    {{{210, 120, 50}, {140, 50, 30}}},   // diagonal stripes
}};

int texture_tone(int label, int x, int y) {
  switch (label) {
    case 0: return (y / 2) % 2;
    case 1: return ((x / 2) + (y / 2)) % 2;
    default: return ((x + y) / 2) % 2;
  }
}

}  // namespace

RgbImage render_textures(const std::vector<int>& labels, int resolution) {
  RgbImage im(resolution, resolution);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      const int label = labels[static_cast<std::size_t>(y) * resolution + x];
      const auto& color = kTextureColors.at(label)[texture_tone(label, x, y)];
      for (int c = 0; c < 3; ++c) im.at(x, y, c) = color[c];
    }
  return im;
}

std::vector<int> texture_labels(const RgbImage& image) {
  std::vector<int> out(static_cast<std::size_t>(image.width) * image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      int best = 1 << 30;
      int arg = 0;
      for (int label = 0; label < static_cast<int>(kTextureColors.size()); ++label)
        for (const auto& color : kTextureColors[label]) {
          int d = 0;
          for (int c = 0; c < 3; ++c) d += (image.at(x, y, c) - color[c]) * (image.at(x, y, c) - color[c]);
          if (d < best) {
            best = d;
            arg = label;
          }
        }
      out[static_cast<std::size_t>(y) * image.width + x] = arg;
    }
  return out;
}

namespace {

struct SceneWriter {
  const SyntheticTaskSpec& spec;
  std::mt19937_64 rng;
  LabelPalette palette = region_palette();

  std::pair<RgbImage, RgbImage> scene() {
    if (spec.task == SyntheticTask::color_inversion) {
      RgbImage x = synthetic_blobs(spec.resolution, rng);
      return {x, invert_colors(x)};
    }
    const auto labels = synthetic_regions(spec.resolution, rng);
    return {render_labels(labels, spec.resolution, palette), render_textures(labels, spec.resolution)};
  }
};

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04d.png", prefix, i);
  return buf;
}

}  // namespace

DatasetManifest generate_synthetic(const SyntheticTaskSpec& spec, const fs::path& out_dir) {
  spec.validate();
  try {
    fs::create_directories(out_dir / "x");
    fs::create_directories(out_dir / "y");
    if (spec.num_test > 0) {
      fs::create_directories(out_dir / "test" / "x");
      fs::create_directories(out_dir / "test" / "y");
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot create '" + out_dir.string() + "': " + e.code().message());
  }
  SceneWriter w{spec, std::mt19937_64(spec.seed)};
  DatasetManifest m;
  if (spec.task == SyntheticTask::region_texture) m.palette = w.palette;
  for (int i = 0; i < spec.num_paired; ++i) {
    auto [x, y] = w.scene();
    PairedEntry e{out_dir / "x" / numbered("p", i), out_dir / "y" / numbered("p", i)};
    write_png(e.x, x);
    write_png(e.y, y);
    m.paired.push_back(std::move(e));
  }
  // Unaligned sides come from independent scenes.
  for (int i = 0; i < spec.num_unpaired; ++i) {
    m.unpaired_x.push_back(out_dir / "x" / numbered("u", i));
    write_png(m.unpaired_x.back(), w.scene().first);
  }
  for (int i = 0; i < spec.num_unpaired; ++i) {
    m.unpaired_y.push_back(out_dir / "y" / numbered("u", i));
    write_png(m.unpaired_y.back(), w.scene().second);
  }
  save_manifest(m, out_dir / "manifest.txt");
  if (spec.num_test > 0) {
    DatasetManifest test;
    test.palette = m.palette;
    for (int i = 0; i < spec.num_test; ++i) {
      auto [x, y] = w.scene();
      PairedEntry e{out_dir / "test" / "x" / numbered("t", i), out_dir / "test" / "y" / numbered("t", i)};
      write_png(e.x, x);
      write_png(e.y, y);
      test.paired.push_back(std::move(e));
    }
    save_manifest(test, out_dir / "test_manifest.txt");
  }
  std::ofstream meta(out_dir / "synthetic.txt");
  meta << "task=" << to_string(spec.task) << "\nresolution=" << spec.resolution << "\nnum_paired=" << spec.num_paired
       << "\nnum_unpaired=" << spec.num_unpaired << "\nnum_test=" << spec.num_test << "\nseed=" << spec.seed << '\n';
  if (!meta) throw IoError("cannot write '" + (out_dir / "synthetic.txt").string() + "'");
  return m;
}

}  // namespace hybridgan
