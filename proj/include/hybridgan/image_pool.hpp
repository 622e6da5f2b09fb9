#pragma once

#include <optional>
#include <random>
#include <vector>

#include "hybridgan/tensor.hpp"

namespace hybridgan {

/// A generated image plus, for conditional discriminators, the condition it
/// was scored with.
template <typename Scalar>
struct PoolEntry {
  Tensor<Scalar> image;
  std::optional<Tensor<Scalar>> condition;

  bool operator==(const PoolEntry&) const = default;
};

/// Fixed-capacity history of generated samples. Discriminators are trained
/// on what the pool hands back instead of the latest generator output.
template <typename Scalar>
class ImagePool {
 public:
  explicit ImagePool(std::size_t capacity = 50) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<PoolEntry<Scalar>>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  /// Deterministic core of query(): below capacity the fresh entry is stored
  /// and returned; at capacity `swap` selects between returning fresh
  /// (false) and returning slot `slot` while storing fresh in its place.
  PoolEntry<Scalar> query(PoolEntry<Scalar> fresh, bool swap, std::size_t slot) {
    if (capacity_ == 0) return fresh;
    if (entries_.size() < capacity_) {
      entries_.push_back(fresh);
      return fresh;
    }
    if (!swap) return fresh;
    PoolEntry<Scalar> old = std::move(entries_.at(slot));
    entries_[slot] = std::move(fresh);
    return old;
  }

  /// Swaps with probability 1/2 into a uniformly chosen slot.
  template <typename Rng>
  PoolEntry<Scalar> query(PoolEntry<Scalar> fresh, Rng& rng) {
    if (capacity_ == 0 || entries_.size() < capacity_) return query(std::move(fresh), false, 0);
    const bool swap = std::uniform_real_distribution<double>(0.0, 1.0)(rng) > 0.5;
    std::size_t slot = 0;
    if (swap) slot = std::uniform_int_distribution<std::size_t>(0, capacity_ - 1)(rng);
    return query(std::move(fresh), swap, slot);
  }

  /// Restores stored entries (checkpoint loading).
  void restore(std::vector<PoolEntry<Scalar>> entries) {
    if (entries.size() > capacity_) throw ValidationError("pool holds more entries than its capacity");
    entries_ = std::move(entries);
  }

  bool operator==(const ImagePool&) const = default;

 private:
  std::size_t capacity_;
  std::vector<PoolEntry<Scalar>> entries_;
};

}  // namespace hybridgan
