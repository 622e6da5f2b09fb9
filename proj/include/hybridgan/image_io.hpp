#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hybridgan/tensor.hpp"

namespace hybridgan {

/// 8-bit interleaved RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, RGBRGB...

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool operator==(const RgbImage&) const = default;
};

/// Reads an 8-bit RGB PNG. Non-RGB files (gray, alpha) are rejected.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

enum class Interpolation { bicubic, nearest };

/// Planar float image, values on the 0..255 scale.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> planes;  // [3][h][w]

  float& at(int c, int y, int x) { return planes[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return planes[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

FloatImage to_float(const RgbImage& image);
/// Resizes with Keys bicubic (a = -0.5) or nearest-neighbour sampling.
FloatImage resize(const FloatImage& image, int width, int height, Interpolation mode);

/// Maps [lo, hi] back to 0..255 with rounding and clamping.
RgbImage tensor_to_rgb(const Tensor<float>& t, Index sample = 0, float lo = -1.f, float hi = 1.f);

/// Places images side by side (all must share a height).
RgbImage hconcat(const std::vector<RgbImage>& images);

}  // namespace hybridgan
