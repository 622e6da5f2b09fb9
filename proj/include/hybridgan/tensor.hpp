#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <sstream>
#include <string>

#include "hybridgan/errors.hpp"

namespace hybridgan {

using Index = Eigen::Index;

/// (batch, channels, height, width)
struct Shape4 {
  Index n = 0, c = 0, h = 0, w = 0;

  Index size() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
  }
};

/// Dense NCHW tensor. Each sample is exposed as a row-major (channels, h*w)
/// matrix view so convolutions reduce to plain GEMMs.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using SampleMap = Eigen::Map<Matrix>;
  using ConstSampleMap = Eigen::Map<const Matrix>;

  Tensor() = default;
  explicit Tensor(const Shape4& shape) : shape_(shape), data_(Vector::Zero(shape.size())) {}
  Tensor(Index n, Index c, Index h, Index w) : Tensor(Shape4{n, c, h, w}) {}

  static Tensor constant(const Shape4& shape, Scalar value) {
    Tensor t(shape);
    t.data_.setConstant(value);
    return t;
  }

  const Shape4& shape() const { return shape_; }
  Index batch() const { return shape_.n; }
  Index channels() const { return shape_.c; }
  Index height() const { return shape_.h; }
  Index width() const { return shape_.w; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector& values() { return data_; }
  const Vector& values() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator()(Index n, Index c, Index y, Index x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  Scalar operator()(Index n, Index c, Index y, Index x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  SampleMap sample(Index n) {
    return SampleMap(data_.data() + n * shape_.c * shape_.plane(), shape_.c, shape_.plane());
  }
  ConstSampleMap sample(Index n) const {
    return ConstSampleMap(data_.data() + n * shape_.c * shape_.plane(), shape_.c, shape_.plane());
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.values() = data_.template cast<Other>();
    return out;
  }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Shape4 shape_;
  Vector data_;
};

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": expected " + a.shape().str() + ", got " + b.shape().str());
  }
}

/// Concatenates along the channel axis, `first` channels before `second`.
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& first, const Tensor<Scalar>& second) {
  const Shape4& a = first.shape();
  const Shape4& b = second.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw ShapeError("channel concatenation: " + a.str() + " vs " + b.str());
  }
  Tensor<Scalar> out(a.n, a.c + b.c, a.h, a.w);
  for (Index n = 0; n < a.n; ++n) {
    out.sample(n).topRows(a.c) = first.sample(n);
    out.sample(n).bottomRows(b.c) = second.sample(n);
  }
  return out;
}

/// Inverse of concat_channels: the first `leading` channels go to `first`.
template <typename Scalar>
void split_channels(const Tensor<Scalar>& joined, Index leading, Tensor<Scalar>& first,
                    Tensor<Scalar>& second) {
  const Shape4& s = joined.shape();
  first = Tensor<Scalar>(s.n, leading, s.h, s.w);
  second = Tensor<Scalar>(s.n, s.c - leading, s.h, s.w);
  for (Index n = 0; n < s.n; ++n) {
    first.sample(n) = joined.sample(n).topRows(leading);
    second.sample(n) = joined.sample(n).bottomRows(s.c - leading);
  }
}

/// Extracts a single sample as a batch-of-one tensor.
template <typename Scalar>
Tensor<Scalar> slice_batch(const Tensor<Scalar>& t, Index n) {
  const Shape4& s = t.shape();
  Tensor<Scalar> out(1, s.c, s.h, s.w);
  out.sample(0) = t.sample(n);
  return out;
}

}  // namespace hybridgan
