#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hybridgan/data.hpp"
#include "hybridgan/eval.hpp"
#include "temp_dir.hpp"

using namespace hybridgan;
namespace fs = std::filesystem;
using hybridgan::testing::TempDir;

namespace {

RgbImage gradient_image(int w, int h) {
  RgbImage im(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) im.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 3 + c * 50) % 256);
  return im;
}

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Manifest, CountsFromText) {
  std::ostringstream text;
  text << "[paired]\n";
  for (int i = 0; i < 30; ++i) text << "x/p" << i << ".png\ty/p" << i << ".png\n";
  text << "[unpaired_x]\n";
  for (int i = 0; i < 2945; ++i) text << "x/u" << i << ".png\n";
  text << "# comment\n[unpaired_y]\n";
  for (int i = 0; i < 2945; ++i) text << "y/u" << i << ".png\n";
  const DatasetManifest m = parse_manifest(text.str(), "/data");
  EXPECT_EQ(m.num_paired(), 30u);
  EXPECT_EQ(m.num_unpaired_x(), 2945u);
  EXPECT_EQ(m.num_unpaired_y(), 2945u);
  EXPECT_EQ(m.paired[3].y, fs::path("/data/y/p3.png"));
  EXPECT_FALSE(m.palette);
}

TEST(Manifest, EmptyManifestIsRejected) {
  EXPECT_THROW(parse_manifest("# nothing\n[paired]\n", "/"), ValidationError);
  EXPECT_THROW(DatasetManifest{}.validate(), ValidationError);
}

TEST(Manifest, MalformedLinesAreRejected) {
  EXPECT_THROW(parse_manifest("[paired]\nonly_one_field.png\n", "/"), ValidationError);
  EXPECT_THROW(parse_manifest("[somewhere]\n", "/"), ValidationError);
  EXPECT_THROW(parse_manifest("a.png\n", "/"), ValidationError);
  EXPECT_THROW(parse_manifest("[palette]\n0\t300\t0\t0\tred\n[unpaired_x]\na.png\n", "/"), ValidationError);
  EXPECT_THROW(parse_manifest("[palette]\n1\t0\t0\t0\tred\n[unpaired_x]\na.png\n", "/"), ConfigError);
}

TEST(Manifest, DanglingPathIsNamed) {
  TempDir dir;
  write_png(dir / "a.png", gradient_image(4, 4));
  std::ofstream(dir / "m.txt") << "[paired]\na.png\tmissing_y.png\n";
  try {
    load_manifest(dir / "m.txt");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing_y.png"), std::string::npos);
  }
  EXPECT_THROW(load_manifest(dir / "absent.txt"), IoError);
}

TEST(Manifest, SaveLoadRoundTrip) {
  TempDir dir;
  DatasetManifest m;
  m.palette = region_palette();
  for (const char* name : {"a.png", "b.png", "c.png"}) write_png(dir / name, gradient_image(4, 4));
  m.paired.push_back({dir / "a.png", dir / "b.png"});
  m.unpaired_x.push_back(dir / "c.png");
  m.unpaired_y.push_back(dir / "a.png");
  save_manifest(m, dir / "m.txt");
  EXPECT_EQ(load_manifest(dir / "m.txt"), m);
}

TEST(Schedule, PhaseForEpoch) {
  DatasetManifest hybrid;
  hybrid.paired.resize(30);
  hybrid.unpaired_x.resize(5);
  hybrid.unpaired_y.resize(5);
  EXPECT_EQ(phase_for_epoch(hybrid, 1, 50), Phase::paired);
  EXPECT_EQ(phase_for_epoch(hybrid, 50, 50), Phase::paired);
  EXPECT_EQ(phase_for_epoch(hybrid, 51, 50), Phase::unpaired);
  EXPECT_EQ(phase_for_epoch(hybrid, 200, 50), Phase::unpaired);

  DatasetManifest unpaired_only = hybrid;
  unpaired_only.paired.clear();
  for (int e = 1; e <= 200; ++e) EXPECT_EQ(phase_for_epoch(unpaired_only, e, 50), Phase::unpaired);

  DatasetManifest paired_only;
  paired_only.paired.resize(30);
  for (int e = 1; e <= 200; ++e) EXPECT_EQ(phase_for_epoch(paired_only, e, 50), Phase::paired);
}

TEST(Preprocess, DefaultSizesAndRange) {
  const PreprocessConfig c;
  std::mt19937_64 rng(1);
  const Tensor<float> t = preprocess(gradient_image(256, 256), c, rng);
  EXPECT_EQ(t.shape(), (Shape4{1, 3, 256, 256}));
  EXPECT_GE(t.values().minCoeff(), -1.f);
  EXPECT_LE(t.values().maxCoeff(), 1.f);
}

TEST(Preprocess, FixedSeedGivesFixedCrop) {
  const PreprocessConfig c;
  const RgbImage im = gradient_image(256, 256);
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(preprocess(im, c, a), preprocess(im, c, b));
}

TEST(Preprocess, EqualLoadAndCropIsBitExact) {
  PreprocessConfig c;
  c.load_size = c.crop_size = 32;
  const RgbImage im = gradient_image(32, 32);
  std::mt19937_64 a(1), b(2);
  const Tensor<float> t = preprocess(im, c, a);
  EXPECT_EQ(t, preprocess(im, c, b));
  EXPECT_EQ(tensor_to_rgb(t), im);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(t(0, ch, y, x), (im.at(x, y, ch) * 2.f - 255.f) / 255.f);
}

TEST(Preprocess, PairSharesCropOffsets) {
  PreprocessConfig c;
  c.load_size = 40;
  c.crop_size = 32;
  c.random_flip = true;
  const RgbImage im = gradient_image(40, 40);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    std::mt19937_64 rng(seed);
    const auto [x, y] = preprocess_pair(im, im, c, rng, ImageKind::photo, ImageKind::photo);
    EXPECT_EQ(x, y);
  }
}

TEST(Preprocess, LabelsUseNearestSampling) {
  PreprocessConfig c;
  c.load_size = 48;
  c.crop_size = 48;
  const LabelPalette palette = region_palette();
  std::mt19937_64 rng(3);
  const std::vector<int> labels = synthetic_regions(32, rng);
  const RgbImage map = render_labels(labels, 32, palette);
  std::mt19937_64 crop(1);
  const Tensor<float> t = preprocess(map, c, crop, ImageKind::label);
  std::set<std::array<int, 3>> colors;
  const RgbImage back = tensor_to_rgb(t);
  for (int y = 0; y < back.height; ++y)
    for (int x = 0; x < back.width; ++x) colors.insert({back.at(x, y, 0), back.at(x, y, 1), back.at(x, y, 2)});
  EXPECT_LE(colors.size(), 3u);
}

TEST(Preprocess, ConfigValidation) {
  PreprocessConfig c;
  c.crop_size = 30;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PreprocessConfig{};
  c.load_size = 200;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PreprocessConfig{};
  c.normalize_max = c.normalize_min;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Sampling, PairedEpochVisitsEachPairOnce) {
  DatasetManifest m;
  for (int i = 0; i < 30; ++i) m.paired.push_back({"x" + std::to_string(i), "y" + std::to_string(i)});
  std::mt19937_64 rng(1);
  const auto samples = iterate_epoch(m, Phase::paired, rng);
  ASSERT_EQ(samples.size(), 30u);
  std::set<fs::path> seen;
  for (const auto& s : samples) {
    EXPECT_TRUE(s.aligned);
    EXPECT_EQ(s.x.string().substr(1), s.y.string().substr(1));
    seen.insert(s.x);
  }
  EXPECT_EQ(seen.size(), 30u);
}

TEST(Sampling, ShorterSideWrapsAround) {
  DatasetManifest m;
  m.unpaired_x = {"x0", "x1", "x2", "x3", "x4"};
  m.unpaired_y = {"y0", "y1", "y2"};
  std::mt19937_64 rng(7);
  const auto samples = iterate_epoch(m, Phase::unpaired, rng);
  ASSERT_EQ(samples.size(), 5u);
  std::set<fs::path> xs, first_ys;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    xs.insert(samples[i].x);
    EXPECT_FALSE(samples[i].aligned);
    if (i < 3) first_ys.insert(samples[i].y);
  }
  EXPECT_EQ(xs.size(), 5u);
  EXPECT_EQ(first_ys.size(), 3u);
  EXPECT_EQ(samples[3].y, samples[0].y);
  EXPECT_EQ(samples[4].y, samples[1].y);
}

TEST(Sampling, SameSeedSameOrder) {
  DatasetManifest m;
  for (int i = 0; i < 20; ++i) m.unpaired_x.push_back("x" + std::to_string(i));
  for (int i = 0; i < 13; ++i) m.unpaired_y.push_back("y" + std::to_string(i));
  std::mt19937_64 a(3), b(3);
  EXPECT_EQ(iterate_epoch(m, Phase::unpaired, a), iterate_epoch(m, Phase::unpaired, b));
}

TEST(Sampling, PairsJoinUnpairedPoolsOnlyWhenRequested) {
  DatasetManifest m;
  m.paired = {{"px", "py"}};
  m.unpaired_x = {"x0", "x1"};
  m.unpaired_y = {"y0", "y1"};
  std::mt19937_64 rng(1);
  EXPECT_EQ(iterate_epoch(m, Phase::unpaired, rng, true).size(), 3u);
  EXPECT_EQ(iterate_epoch(m, Phase::unpaired, rng, false).size(), 2u);
  DatasetManifest none;
  none.unpaired_x = {"x0"};
  EXPECT_THROW(iterate_epoch(none, Phase::paired, rng), PhaseError);
  EXPECT_THROW(iterate_epoch(none, Phase::unpaired, rng), PhaseError);
}

TEST(Synthetic, CountsAndFiles) {
  TempDir dir;
  SyntheticTaskSpec spec;
  spec.num_test = 4;
  const DatasetManifest m = generate_synthetic(spec, dir.path());
  EXPECT_EQ(m.num_paired(), 10u);
  EXPECT_EQ(m.num_unpaired_x(), 190u);
  EXPECT_EQ(m.num_unpaired_y(), 190u);
  EXPECT_EQ(load_manifest(dir / "manifest.txt"), m);
  EXPECT_EQ(load_manifest(dir / "test_manifest.txt").num_paired(), 4u);
  EXPECT_TRUE(fs::exists(dir / "synthetic.txt"));
  const RgbImage first = read_png(m.paired.front().x);
  EXPECT_EQ(first.width, 32);
  EXPECT_EQ(first.height, 32);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  TempDir dir;
  SyntheticTaskSpec spec;
  spec.num_paired = 3;
  spec.num_unpaired = 3;
  spec.task = SyntheticTask::region_texture;
  const DatasetManifest a = generate_synthetic(spec, dir / "a");
  const DatasetManifest b = generate_synthetic(spec, dir / "b");
  for (std::size_t i = 0; i < a.paired.size(); ++i) {
    EXPECT_EQ(file_bytes(a.paired[i].x), file_bytes(b.paired[i].x));
    EXPECT_EQ(file_bytes(a.paired[i].y), file_bytes(b.paired[i].y));
  }
  for (std::size_t i = 0; i < a.unpaired_y.size(); ++i) EXPECT_EQ(file_bytes(a.unpaired_y[i]), file_bytes(b.unpaired_y[i]));
}

TEST(Synthetic, ColorInversionIsExactNegation) {
  TempDir dir;
  SyntheticTaskSpec spec;
  spec.num_paired = 5;
  spec.num_unpaired = 0;
  const DatasetManifest m = generate_synthetic(spec, dir.path());
  PreprocessConfig c;
  c.load_size = c.crop_size = 32;
  for (const auto& e : m.paired) {
    const Tensor<float> x = preprocess_eval(read_png(e.x), c);
    const Tensor<float> y = preprocess_eval(read_png(e.y), c);
    EXPECT_EQ(y.values(), (-x.values()).eval());
  }
}

TEST(Synthetic, RegionTextureQuantizesBackToLabels) {
  TempDir dir;
  SyntheticTaskSpec spec;
  spec.task = SyntheticTask::region_texture;
  spec.num_paired = 8;
  spec.num_unpaired = 0;
  const DatasetManifest m = generate_synthetic(spec, dir.path());
  ASSERT_TRUE(m.palette);
  ConfusionMatrix cm(m.palette->size());
  for (const auto& e : m.paired) {
    const RgbImage texture = read_png(e.y);
    const std::vector<int> recovered = texture_labels(texture);
    const LabelMap predicted{texture.width, texture.height, recovered};
    cm.accumulate(predicted, quantize_labels(read_png(e.x), *m.palette));
  }
  EXPECT_EQ(metrics(cm).pixel_accuracy, 1.0);
}

TEST(Synthetic, InvalidSpecs) {
  TempDir dir;
  SyntheticTaskSpec spec;
  spec.num_paired = 0;
  spec.num_unpaired = 0;
  EXPECT_THROW(generate_synthetic(spec, dir.path()), ValidationError);
  EXPECT_THROW(synthetic_task_from("mosaic"), ConfigError);
  EXPECT_EQ(synthetic_task_from("region_texture"), SyntheticTask::region_texture);
}

TEST(ImageIo, PngRoundTripAndRejections) {
  TempDir dir;
  const RgbImage im = gradient_image(7, 5);
  write_png(dir / "a.png", im);
  EXPECT_EQ(read_png(dir / "a.png"), im);
  std::ofstream(dir / "bad.png") << "not a png";
  EXPECT_THROW(read_png(dir / "bad.png"), IoError);
  EXPECT_THROW(read_png(dir / "none.png"), IoError);
}

TEST(ImageIo, ResizeKeepsConstantImages) {
  RgbImage flat(9, 9);
  std::fill(flat.pixels.begin(), flat.pixels.end(), 77);
  for (Interpolation mode : {Interpolation::bicubic, Interpolation::nearest}) {
    const FloatImage r = resize(to_float(flat), 20, 14, mode);
    for (float v : r.planes) EXPECT_NEAR(v, 77.f, 1e-4);
  }
}
