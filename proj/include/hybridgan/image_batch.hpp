#pragma once

#include <string>

#include "hybridgan/tensor.hpp"

namespace hybridgan {

enum class Domain { X, Y };

inline Domain flip(Domain d) { return d == Domain::X ? Domain::Y : Domain::X; }
inline const char* to_string(Domain d) { return d == Domain::X ? "X" : "Y"; }

/// Normalized image batch tagged with the domain it belongs to.
template <typename Scalar>
struct ImageBatch {
  Tensor<Scalar> data;
  Domain domain = Domain::X;
  Scalar range_min = Scalar(-1);
  Scalar range_max = Scalar(1);
};

/// Checks the batch invariants: values inside the range, spatial size a
/// multiple of 4, and the expected channel count.
template <typename Scalar>
void validate_image_batch(const ImageBatch<Scalar>& batch, Index expected_channels) {
  const Shape4& s = batch.data.shape();
  if (s.c != expected_channels) {
    throw ShapeError("domain " + std::string(to_string(batch.domain)) + " expects " +
                     std::to_string(expected_channels) + " channels, got " + std::to_string(s.c));
  }
  if (s.h % 4 != 0 || s.w % 4 != 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("spatial size must be a positive multiple of 4, got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  }
  if (batch.data.size() > 0 && (batch.data.values().minCoeff() < batch.range_min ||
                                batch.data.values().maxCoeff() > batch.range_max)) {
    throw ValidationError("image values outside the declared range");
  }
}

}  // namespace hybridgan
