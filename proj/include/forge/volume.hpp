/**
 * @file volume.hpp
 * @brief Immutable volumetric containers: labels, intensities and
 *        per-class partial-volume fractions.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forge/geometry.hpp"

namespace forge {

using Label = std::uint16_t;

/// Scalar 3D grid bound to a geometry. Contents are fixed at construction.
template <typename T>
class Volume3 {
 public:
  using value_type = T;

  Volume3() = default;
  Volume3(Geometry geometry, std::vector<T> data);
  /// Filled with `fill`.
  explicit Volume3(Geometry geometry, T fill = T{});

  const Geometry& geometry() const { return geometry_; }
  std::span<const T> values() const { return data_; }
  const T& at(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[geometry_.index(x, y, z)];
  }
  const T& operator[](std::size_t i) const { return data_[i]; }
  std::size_t size() const { return data_.size(); }

  /// Moves the storage out, leaving the volume empty.
  std::vector<T> release() && { return std::move(data_); }

  friend bool operator==(const Volume3& a, const Volume3& b) {
    return a.geometry_.dims() == b.geometry_.dims() && a.data_ == b.data_;
  }

 private:
  Geometry geometry_;
  std::vector<T> data_;
};

/// Integer class or raw-template labels.
using LabelVolume = Volume3<Label>;
/// Scalar image; values lie in [0,1] once normalized.
using IntensityVolume = Volume3<float>;

/// K-channel fractional tissue map, stored channel-major. Every voxel's
/// channels are in [0,1] and sum to 1 within 1e-6 (checked on construction).
class ProbVolume {
 public:
  ProbVolume() = default;
  ProbVolume(Geometry geometry, std::size_t channels, std::vector<double> data);

  const Geometry& geometry() const { return geometry_; }
  std::size_t channels() const { return channels_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> channel(std::size_t k) const {
    const std::size_t n = geometry_.voxel_count();
    return std::span<const double>(data_).subspan(k * n, n);
  }
  double at(std::size_t k, std::size_t voxel) const {
    return data_[k * geometry_.voxel_count() + voxel];
  }

  static constexpr double kSumTolerance = 1e-6;

 private:
  Geometry geometry_;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

extern template class Volume3<Label>;
extern template class Volume3<float>;

}  // namespace forge
