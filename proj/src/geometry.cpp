#include "forge/geometry.hpp"

#include <cmath>

#include "forge/error.hpp"

namespace forge {

Geometry::Geometry(const Dims3& dims, const Eigen::Matrix4d& affine)
    : dims_(dims), affine_(affine) {
  for (std::size_t a = 0; a < 3; ++a) {
    if (dims_[a] == 0) throw PreconditionError("geometry: zero-length axis");
    voxel_size_[a] = affine_.block<3, 1>(0, a).norm();
    if (!(voxel_size_[a] > 0.0) || !std::isfinite(voxel_size_[a])) {
      throw PreconditionError("geometry: voxel size must be strictly positive");
    }
  }
  if (std::abs(affine_.topLeftCorner<3, 3>().determinant()) < 1e-12) {
    throw PreconditionError("geometry: affine is not invertible");
  }
}

Geometry Geometry::axis_aligned(const Dims3& dims, const Vec3& voxel_size,
                                const Vec3& origin) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 3; ++i) {
    a(i, i) = voxel_size[i];
    a(i, 3) = origin[i];
  }
  return Geometry(dims, a);
}

Eigen::Vector3d Geometry::to_world(const Eigen::Vector3d& voxel) const {
  return affine_.topLeftCorner<3, 3>() * voxel + affine_.block<3, 1>(0, 3);
}

Eigen::Vector3d Geometry::to_voxel(const Eigen::Vector3d& world) const {
  return affine_.topLeftCorner<3, 3>().inverse() *
         (world - affine_.block<3, 1>(0, 3));
}

Eigen::Vector3d Geometry::center_world() const {
  Eigen::Vector3d c((dims_[0] - 1) * 0.5, (dims_[1] - 1) * 0.5,
                    (dims_[2] - 1) * 0.5);
  return to_world(c);
}

bool Geometry::same_grid(const Geometry& other, double tol) const {
  if (dims_ != other.dims_) return false;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(voxel_size_[a] - other.voxel_size_[a]) > tol) return false;
  }
  return true;
}

}  // namespace forge
