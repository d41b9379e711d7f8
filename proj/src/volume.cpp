#include "forge/volume.hpp"

#include <cmath>
#include <string>

#include "forge/error.hpp"

namespace forge {

template <typename T>
Volume3<T>::Volume3(Geometry geometry, std::vector<T> data)
    : geometry_(std::move(geometry)), data_(std::move(data)) {
  if (data_.size() != geometry_.voxel_count()) {
    throw ShapeError("volume: data length " + std::to_string(data_.size()) +
                     " does not match grid of " +
                     std::to_string(geometry_.voxel_count()) + " voxels");
  }
}

template <typename T>
Volume3<T>::Volume3(Geometry geometry, T fill)
    : geometry_(std::move(geometry)), data_(geometry_.voxel_count(), fill) {}

template class Volume3<Label>;
template class Volume3<float>;

ProbVolume::ProbVolume(Geometry geometry, std::size_t channels,
                       std::vector<double> data)
    : geometry_(std::move(geometry)), channels_(channels), data_(std::move(data)) {
  const std::size_t n = geometry_.voxel_count();
  if (channels_ == 0) throw ShapeError("prob volume: zero channels");
  if (data_.size() != n * channels_) {
    throw ShapeError("prob volume: data length does not match grid x channels");
  }
  constexpr double kRangeSlack = 1e-9;
  std::vector<double> sums(n, 0.0);
  for (std::size_t k = 0; k < channels_; ++k) {
    const double* c = data_.data() + k * n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!(c[v] >= -kRangeSlack && c[v] <= 1.0 + kRangeSlack)) {
        throw PreconditionError("prob volume: channel " + std::to_string(k) +
                                " value out of [0,1] at voxel " +
                                std::to_string(v));
      }
      sums[v] += c[v];
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (std::abs(sums[v] - 1.0) > kSumTolerance) {
      throw PreconditionError("prob volume: channel sum " +
                              std::to_string(sums[v]) + " at voxel " +
                              std::to_string(v));
    }
  }
}

}  // namespace forge
