/**
 * @file geometry.hpp
 * @brief Voxel grid geometry: dimensions, spacing and voxel-to-world affine.
 */
#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>

namespace forge {

using Vec3 = std::array<double, 3>;
using Dims3 = std::array<std::size_t, 3>;

/// Grid description. Data is stored x-fastest; the affine maps a voxel index
/// (i, j, k, 1) to world millimetres.
class Geometry {
 public:
  Geometry() = default;

  /// Builds a geometry from an explicit affine. Throws PreconditionError if
  /// the affine is singular or any dimension is zero.
  Geometry(const Dims3& dims, const Eigen::Matrix4d& affine);

  /// Axis-aligned grid whose voxel (0,0,0) centre sits at `origin`.
  static Geometry axis_aligned(const Dims3& dims, const Vec3& voxel_size,
                               const Vec3& origin = {0.0, 0.0, 0.0});

  const Dims3& dims() const { return dims_; }
  const Vec3& voxel_size() const { return voxel_size_; }
  const Eigen::Matrix4d& affine() const { return affine_; }
  Eigen::Matrix4d inverse_affine() const { return affine_.inverse(); }

  std::size_t voxel_count() const { return dims_[0] * dims_[1] * dims_[2]; }
  double voxel_volume() const {
    return voxel_size_[0] * voxel_size_[1] * voxel_size_[2];
  }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_[0] * (y + dims_[1] * z);
  }

  Eigen::Vector3d to_world(const Eigen::Vector3d& voxel) const;
  Eigen::Vector3d to_voxel(const Eigen::Vector3d& world) const;

  /// World position of the grid centre, ((n-1)/2 per axis).
  Eigen::Vector3d center_world() const;

  /// True when dims match and voxel sizes agree within `tol` mm.
  bool same_grid(const Geometry& other, double tol = 1e-4) const;

 private:
  Dims3 dims_{0, 0, 0};
  Vec3 voxel_size_{1.0, 1.0, 1.0};
  Eigen::Matrix4d affine_ = Eigen::Matrix4d::Identity();
};

}  // namespace forge
