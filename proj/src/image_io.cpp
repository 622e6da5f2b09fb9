#include "hybridgan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hybridgan/errors.hpp"

namespace hybridgan {

RgbImage read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot decode '" + path.string() + "': " + img.message);
  }
  const png_uint_32 native = img.format;
  if ((native & PNG_FORMAT_FLAG_COLOR) == 0 || (native & PNG_FORMAT_FLAG_ALPHA) != 0) {
    png_image_free(&img);
    throw ValidationError("'" + path.string() + "' is not a 3-channel RGB image");
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    throw IoError("cannot decode '" + path.string() + "': " + img.message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write '" + path.string() + "': " + img.message);
  }
}

FloatImage to_float(const RgbImage& image) {
  FloatImage out{image.width, image.height, std::vector<float>(image.pixels.size())};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = image.at(x, y, c);
  return out;
}

namespace {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0;
}

struct Tap {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Tap> cubic_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(center));
    double total = 0;
    for (int k = 0; k < 4; ++k) {
      const int i = base - 1 + k;
      taps[o].index[k] = std::clamp(i, 0, in - 1);
      taps[o].weight[k] = cubic_weight(center - i);
      total += taps[o].weight[k];
    }
    for (double& w : taps[o].weight) w /= total;
  }
  return taps;
}

}  // namespace

FloatImage resize(const FloatImage& image, int width, int height, Interpolation mode) {
  if (width == image.width && height == image.height) return image;
  FloatImage out{width, height, std::vector<float>(static_cast<std::size_t>(width) * height * 3)};
  if (mode == Interpolation::nearest) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < height; ++y) {
        const int sy = std::min(image.height - 1, static_cast<int>((y + 0.5) * image.height / height));
        for (int x = 0; x < width; ++x) {
          const int sx = std::min(image.width - 1, static_cast<int>((x + 0.5) * image.width / width));
          out.at(c, y, x) = image.at(c, sy, sx);
        }
      }
    return out;
  }
  // Separable: horizontal pass, then vertical.
  const auto tx = cubic_taps(image.width, width);
  const auto ty = cubic_taps(image.height, height);
  std::vector<double> rows(static_cast<std::size_t>(image.height) * width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = 0;
        for (int k = 0; k < 4; ++k) v += tx[x].weight[k] * image.at(c, y, tx[x].index[k]);
        rows[static_cast<std::size_t>(y) * width + x] = v;
      }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = 0;
        for (int k = 0; k < 4; ++k) v += ty[y].weight[k] * rows[static_cast<std::size_t>(ty[y].index[k]) * width + x];
        out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 255.0));
      }
  }
  return out;
}

RgbImage tensor_to_rgb(const Tensor<float>& t, Index sample, float lo, float hi) {
  if (t.channels() != 3) throw ShapeError("expected a 3-channel tensor, got " + t.shape().str());
  RgbImage out(static_cast<int>(t.width()), static_cast<int>(t.height()));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = (t(sample, c, y, x) - lo) / (hi - lo) * 255.f;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return out;
}

RgbImage hconcat(const std::vector<RgbImage>& images) {
  if (images.empty()) return {};
  int width = 0;
  for (const auto& im : images) {
    if (im.height != images.front().height) throw ShapeError("grid images must share a height");
    width += im.width;
  }
  RgbImage out(width, images.front().height);
  int offset = 0;
  for (const auto& im : images) {
    for (int y = 0; y < im.height; ++y)
      std::copy_n(&im.pixels[static_cast<std::size_t>(y) * im.width * 3], im.width * 3,
                  &out.pixels[(static_cast<std::size_t>(y) * width + offset) * 3]);
    offset += im.width;
  }
  return out;
}

}  // namespace hybridgan
