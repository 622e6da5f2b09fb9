#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hybridgan/tensor.hpp"

namespace hybridgan::ops {

enum class PadMode { zero, reflect };

/// Geometry of a square-kernel 2-D convolution.
struct ConvGeometry {
  Index kernel = 3;
  Index stride = 1;
  Index padding = 0;
  PadMode pad_mode = PadMode::zero;
  Index output_padding = 0;  // transposed convolutions only

  Index conv_output(Index in) const { return (in + 2 * padding - kernel) / stride + 1; }
  Index transposed_output(Index in) const {
    return (in - 1) * stride - 2 * padding + kernel + output_padding;
  }
};

namespace detail {

/// Maps a padded coordinate back into [0, extent), or -1 for a zero pad.
inline Index source_index(Index i, Index extent, PadMode mode) {
  if (i >= 0 && i < extent) return i;
  if (mode == PadMode::zero) return -1;
  if (extent == 1) return 0;
  // Reflection without edge repeat; loops only when the pad exceeds the extent.
  while (i < 0 || i >= extent) {
    if (i < 0) i = -i;
    if (i >= extent) i = 2 * (extent - 1) - i;
  }
  return i;
}

}  // namespace detail

/// Copies a (channels, h*w) plane into a padded (channels, hp*wp) buffer.
template <typename Scalar>
void pad_planes(const Scalar* src, Index channels, Index height, Index width, Index pad, PadMode mode,
                Scalar* dst) {
  const Index hp = height + 2 * pad;
  const Index wp = width + 2 * pad;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* plane = src + c * height * width;
    Scalar* out = dst + c * hp * wp;
    for (Index y = 0; y < hp; ++y) {
      const Index sy = detail::source_index(y - pad, height, mode);
      Scalar* line = out + y * wp;
      if (sy < 0) {
        std::fill(line, line + wp, Scalar(0));
        continue;
      }
      const Scalar* in = plane + sy * width;
      for (Index x = 0; x < pad; ++x) {
        const Index sx = detail::source_index(x - pad, width, mode);
        line[x] = sx < 0 ? Scalar(0) : in[sx];
        const Index sx2 = detail::source_index(width + x, width, mode);
        line[pad + width + x] = sx2 < 0 ? Scalar(0) : in[sx2];
      }
      std::copy(in, in + width, line + pad);
    }
  }
}

/// Adjoint of pad_planes: folds a padded buffer back onto the plane.
template <typename Scalar>
void unpad_planes_add(const Scalar* src, Index channels, Index height, Index width, Index pad, PadMode mode,
                      Scalar* dst) {
  const Index hp = height + 2 * pad;
  const Index wp = width + 2 * pad;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* in = src + c * hp * wp;
    Scalar* plane = dst + c * height * width;
    for (Index y = 0; y < hp; ++y) {
      const Index sy = detail::source_index(y - pad, height, mode);
      if (sy < 0) continue;
      const Scalar* line = in + y * wp;
      Scalar* out = plane + sy * width;
      const bool interior_row = y >= pad && y < pad + height;
      for (Index x = 0; x < wp; ++x) {
        if (interior_row && x >= pad && x < pad + width) {
          out[x - pad] += line[x];
          continue;
        }
        const Index sx = detail::source_index(x - pad, width, mode);
        if (sx >= 0) out[sx] += line[x];
      }
    }
  }
}

/// Unfolds one contiguous sample (channels, h*w) into a
/// (channels*k*k, out_h*out_w) patch matrix. Row order is (channel, ky, kx),
/// matching a weight tensor stored as [out][in][ky][kx].
template <typename Scalar>
typename Tensor<Scalar>::Matrix im2col(const Scalar* src, Index channels, Index height, Index width,
                                       const ConvGeometry& g, Index out_h, Index out_w) {
  const Index k = g.kernel;
  const Index s = g.stride;
  const Index hp = height + 2 * g.padding;
  const Index wp = width + 2 * g.padding;
  std::vector<Scalar> padded(static_cast<std::size_t>(channels * hp * wp));
  pad_planes(src, channels, height, width, g.padding, g.pad_mode, padded.data());
  typename Tensor<Scalar>::Matrix cols(channels * k * k, out_h * out_w);
  for (Index c = 0; c < channels; ++c) {
    const Scalar* plane = padded.data() + c * hp * wp;
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        Scalar* row = cols.row((c * k + ky) * k + kx).data();
        for (Index oy = 0; oy < out_h; ++oy) {
          const Scalar* line = plane + (oy * s + ky) * wp + kx;
          Scalar* dst = row + oy * out_w;
          if (s == 1) {
            std::copy(line, line + out_w, dst);
          } else {
            for (Index ox = 0; ox < out_w; ++ox) dst[ox] = line[ox * s];
          }
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatters patch rows back onto a contiguous plane.
template <typename Scalar>
void col2im_add(const typename Tensor<Scalar>::Matrix& cols, Index channels, Index height, Index width,
                const ConvGeometry& g, Index out_h, Index out_w, Scalar* dst) {
  const Index k = g.kernel;
  const Index s = g.stride;
  const Index hp = height + 2 * g.padding;
  const Index wp = width + 2 * g.padding;
  std::vector<Scalar> padded(static_cast<std::size_t>(channels * hp * wp), Scalar(0));
  for (Index c = 0; c < channels; ++c) {
    Scalar* plane = padded.data() + c * hp * wp;
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Scalar* row = cols.row((c * k + ky) * k + kx).data();
        for (Index oy = 0; oy < out_h; ++oy) {
          Scalar* line = plane + (oy * s + ky) * wp + kx;
          const Scalar* in = row + oy * out_w;
          if (s == 1) {
            for (Index ox = 0; ox < out_w; ++ox) line[ox] += in[ox];
          } else {
            for (Index ox = 0; ox < out_w; ++ox) line[ox * s] += in[ox];
          }
        }
      }
    }
  }
  unpad_planes_add(padded.data(), channels, height, width, g.padding, g.pad_mode, dst);
}

template <typename Scalar>
using WeightMap = Eigen::Map<const typename Tensor<Scalar>::Matrix>;
template <typename Scalar>
using MutableWeightMap = Eigen::Map<typename Tensor<Scalar>::Matrix>;
template <typename Scalar>
using BiasMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
template <typename Scalar>
using MutableBiasMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

/// weight: (out, in*k*k) row-major; bias: (out).
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, const WeightMap<Scalar>& weight,
                      const BiasMap<Scalar>& bias, const ConvGeometry& g) {
  const Shape4& s = x.shape();
  const Index out_h = g.conv_output(s.h);
  const Index out_w = g.conv_output(s.w);
  if (weight.cols() != s.c * g.kernel * g.kernel) {
    throw ShapeError("conv2d input channels: expected " +
                     std::to_string(weight.cols() / (g.kernel * g.kernel)) + ", got " +
                     std::to_string(s.c));
  }
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("conv2d input " + s.str() + " too small for kernel " + std::to_string(g.kernel));
  }
  Tensor<Scalar> y(s.n, weight.rows(), out_h, out_w);
  for (Index n = 0; n < s.n; ++n) {
    const auto cols = im2col(x.sample(n).data(), s.c, s.h, s.w, g, out_h, out_w);
    auto out = y.sample(n);
    out.noalias() = weight * cols;
    out.colwise() += bias;
  }
  return y;
}

/// Returns d(loss)/d(x); accumulates parameter gradients when the maps are given.
template <typename Scalar>
Tensor<Scalar> conv2d_backward(const Tensor<Scalar>& x, const WeightMap<Scalar>& weight,
                               const ConvGeometry& g, const Tensor<Scalar>& dy,
                               MutableWeightMap<Scalar>* d_weight, MutableBiasMap<Scalar>* d_bias,
                               bool need_input_grad = true) {
  const Shape4& s = x.shape();
  const Index out_h = dy.height();
  const Index out_w = dy.width();
  Tensor<Scalar> dx;
  if (need_input_grad) dx = Tensor<Scalar>(s);
  for (Index n = 0; n < s.n; ++n) {
    const auto g_out = dy.sample(n);
    if (d_weight != nullptr) {
      const auto cols = im2col(x.sample(n).data(), s.c, s.h, s.w, g, out_h, out_w);
      d_weight->noalias() += g_out * cols.transpose();
    }
    if (d_bias != nullptr) *d_bias += g_out.rowwise().sum();
    if (need_input_grad) {
      const typename Tensor<Scalar>::Matrix d_cols = weight.transpose() * g_out;
      col2im_add<Scalar>(d_cols, s.c, s.h, s.w, g, out_h, out_w, dx.sample(n).data());
    }
  }
  return dx;
}

/// Fractionally-strided convolution. weight: (in, out*k*k) row-major, the
/// adjoint layout of conv2d.
template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& x, const WeightMap<Scalar>& weight,
                                const BiasMap<Scalar>& bias, const ConvGeometry& g) {
  const Shape4& s = x.shape();
  if (weight.rows() != s.c) {
    throw ShapeError("conv_transpose2d input channels: expected " + std::to_string(weight.rows()) +
                     ", got " + std::to_string(s.c));
  }
  const Index out_c = weight.cols() / (g.kernel * g.kernel);
  const Index out_h = g.transposed_output(s.h);
  const Index out_w = g.transposed_output(s.w);
  Tensor<Scalar> y(s.n, out_c, out_h, out_w);
  for (Index n = 0; n < s.n; ++n) {
    const typename Tensor<Scalar>::Matrix cols = weight.transpose() * x.sample(n);
    col2im_add<Scalar>(cols, out_c, out_h, out_w, g, s.h, s.w, y.sample(n).data());
    y.sample(n).colwise() += bias;
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> conv_transpose2d_backward(const Tensor<Scalar>& x, const WeightMap<Scalar>& weight,
                                         const ConvGeometry& g, const Tensor<Scalar>& dy,
                                         MutableWeightMap<Scalar>* d_weight,
                                         MutableBiasMap<Scalar>* d_bias,
                                         bool need_input_grad = true) {
  const Shape4& s = x.shape();
  Tensor<Scalar> dx;
  if (need_input_grad) dx = Tensor<Scalar>(s);
  for (Index n = 0; n < s.n; ++n) {
    const auto g_out = dy.sample(n);
    const auto d_cols = im2col(g_out.data(), dy.channels(), dy.height(), dy.width(), g, s.h, s.w);
    if (d_weight != nullptr) d_weight->noalias() += x.sample(n) * d_cols.transpose();
    if (d_bias != nullptr) *d_bias += g_out.rowwise().sum();
    if (need_input_grad) dx.sample(n).noalias() = weight * d_cols;
  }
  return dx;
}

/// Per-(sample, channel) normalization without affine parameters.
/// `inv_std` receives one entry per (sample, channel) plane.
template <typename Scalar>
Tensor<Scalar> instance_norm(const Tensor<Scalar>& x, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& inv_std,
                             Scalar eps = Scalar(1e-5)) {
  const Shape4& s = x.shape();
  Tensor<Scalar> y(s);
  inv_std.resize(s.n * s.c);
  for (Index n = 0; n < s.n; ++n) {
    const auto in = x.sample(n);
    auto out = y.sample(n);
    for (Index c = 0; c < s.c; ++c) {
      const Scalar mean = in.row(c).mean();
      const Scalar var = (in.row(c).array() - mean).square().mean();
      const Scalar r = Scalar(1) / std::sqrt(var + eps);
      inv_std[n * s.c + c] = r;
      out.row(c) = (in.row(c).array() - mean) * r;
    }
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> instance_norm_backward(const Tensor<Scalar>& y,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& inv_std,
                                      const Tensor<Scalar>& dy) {
  const Shape4& s = y.shape();
  Tensor<Scalar> dx(s);
  for (Index n = 0; n < s.n; ++n) {
    const auto yn = y.sample(n);
    const auto gn = dy.sample(n);
    auto out = dx.sample(n);
    for (Index c = 0; c < s.c; ++c) {
      const Scalar mean_g = gn.row(c).mean();
      const Scalar mean_gy = gn.row(c).cwiseProduct(yn.row(c)).mean();
      out.row(c) = (gn.row(c).array() - mean_g - yn.row(c).array() * mean_gy) * inv_std[n * s.c + c];
    }
  }
  return dx;
}

enum class Activation { none, relu, leaky_relu, tanh };

template <typename Scalar>
void activate(Tensor<Scalar>& t, Activation act, Scalar slope) {
  auto a = t.values().array();
  switch (act) {
    case Activation::none: break;
    case Activation::relu: a = a.max(Scalar(0)); break;
    case Activation::leaky_relu: a = (a > Scalar(0)).select(a, a * slope); break;
    case Activation::tanh: a = a.tanh(); break;
  }
}

/// Gradient through an activation, expressed in terms of its output.
template <typename Scalar>
Tensor<Scalar> activation_backward(const Tensor<Scalar>& out, Activation act, Scalar slope,
                                   const Tensor<Scalar>& dy) {
  Tensor<Scalar> dx = dy;
  auto g = dx.values().array();
  const auto o = out.values().array();
  switch (act) {
    case Activation::none: break;
    case Activation::relu: g = (o > Scalar(0)).select(g, Scalar(0)); break;
    case Activation::leaky_relu: g = (o > Scalar(0)).select(g, g * slope); break;
    case Activation::tanh: g = g * (Scalar(1) - o.square()); break;
  }
  return dx;
}

}  // namespace hybridgan::ops
