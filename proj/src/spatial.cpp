#include <algorithm>
#include <cmath>
#include <numbers>

#include "forge/error.hpp"
#include "forge/shape.hpp"

namespace forge {

namespace {

Eigen::Matrix3d rotation(const Vec3& deg) {
  const double k = std::numbers::pi / 180.0;
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(deg[0] * k, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(deg[1] * k, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(deg[2] * k, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return rz * ry * rx;
}

/// Per-axis interpolation position of each voxel inside the control grid.
struct AxisCell {
  std::vector<std::size_t> j0;
  std::vector<double> frac;
};

AxisCell axis_cells(std::size_t n, double step, std::size_t nodes) {
  AxisCell c;
  c.j0.resize(n);
  c.frac.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / step;
    std::size_t j = static_cast<std::size_t>(std::floor(u));
    j = std::min(j, nodes >= 2 ? nodes - 2 : 0);
    c.j0[i] = j;
    c.frac[i] = nodes >= 2 ? u - static_cast<double>(j) : 0.0;
  }
  return c;
}

/// Evaluates the trilinear control field at output voxels.
class DisplacementSampler {
 public:
  DisplacementSampler(const ElasticSample& e, const Geometry& grid) : e_(e) {
    active_ = !e.is_zero();
    if (!active_) return;
    const Dims3 need = control_grid_dims(grid, e.control_grid_spacing_mm);
    for (int a = 0; a < 3; ++a) {
      if (e.control_dims[a] < need[a]) {
        throw PreconditionError("elastic control grid does not cover the volume extent");
      }
    }
    if (e.displacement.size() != e.control_dims[0] * e.control_dims[1] * e.control_dims[2]) {
      throw ShapeError("elastic displacement count does not match control_dims");
    }
    for (int a = 0; a < 3; ++a) {
      cells_[a] = axis_cells(grid.dims()[a], e.control_grid_spacing_mm / grid.voxel_size()[a],
                             e.control_dims[a]);
    }
  }

  bool active() const { return active_; }

  Eigen::Vector3d at(std::size_t x, std::size_t y, std::size_t z) const {
    const std::size_t jx = cells_[0].j0[x], jy = cells_[1].j0[y], jz = cells_[2].j0[z];
    const double fx = cells_[0].frac[x], fy = cells_[1].frac[y], fz = cells_[2].frac[z];
    const Dims3& cd = e_.control_dims;
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    for (int c = 0; c < 8; ++c) {
      const std::size_t ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
      const double w = (ox ? fx : 1.0 - fx) * (oy ? fy : 1.0 - fy) * (oz ? fz : 1.0 - fz);
      if (w == 0.0) continue;
      const std::size_t node = std::min(jx + ox, cd[0] - 1) +
                               cd[0] * (std::min(jy + oy, cd[1] - 1) +
                                        cd[1] * std::min(jz + oz, cd[2] - 1));
      const Vec3& v = e_.displacement[node];
      d += w * Eigen::Vector3d(v[0], v[1], v[2]);
    }
    return d;
  }

 private:
  const ElasticSample& e_;
  bool active_ = false;
  std::array<AxisCell, 3> cells_;
};

/// Maps an output voxel index to a (continuous) input voxel index.
struct BackwardMap {
  Eigen::Matrix3d index_linear;   // output index -> input index (affine part)
  Eigen::Vector3d index_offset;
  Eigen::Matrix3d displacement;   // mm displacement -> input index delta

  BackwardMap(const Geometry& in, const Geometry& out, const AffineSample& affine) {
    const Eigen::Matrix3d lin = affine.linear();
    if (std::abs(lin.determinant()) < 1e-6) {
      throw ParameterError("spatial transform: affine is not invertible (|det| < 1e-6)");
    }
    const Eigen::Matrix3d inv = lin.inverse();
    const Eigen::Vector3d c = out.center_world();
    const Eigen::Vector3d t(affine.translation_mm[0], affine.translation_mm[1],
                            affine.translation_mm[2]);
    const Eigen::Matrix3d in_inv = in.affine().topLeftCorner<3, 3>().inverse();
    const Eigen::Vector3d in_origin = in.affine().block<3, 1>(0, 3);
    const Eigen::Matrix3d out_lin = out.affine().topLeftCorner<3, 3>();
    const Eigen::Vector3d out_origin = out.affine().block<3, 1>(0, 3);
    // p = inv (V_out o + o_out - c - t) + c ; s = V_in^-1 (p - o_in)
    index_linear = in_inv * inv * out_lin;
    index_offset = in_inv * (inv * (out_origin - c - t) + c - in_origin);
    displacement = in_inv;
  }

  Eigen::Vector3d operator()(const Eigen::Vector3d& o) const {
    return index_linear * o + index_offset;
  }
};

}  // namespace

Eigen::Matrix3d AffineSample::linear() const {
  Eigen::Matrix3d sh = Eigen::Matrix3d::Identity();
  sh(0, 1) = shear[0];
  sh(0, 2) = shear[1];
  sh(1, 2) = shear[2];
  const Eigen::Matrix3d s = Eigen::Vector3d(scale[0], scale[1], scale[2]).asDiagonal();
  return rotation(rotation_deg) * sh * s;
}

bool AffineSample::is_identity() const {
  for (int i = 0; i < 3; ++i) {
    if (rotation_deg[i] != 0.0 || scale[i] != 1.0 || translation_mm[i] != 0.0 || shear[i] != 0.0) {
      return false;
    }
  }
  return true;
}

bool ElasticSample::is_zero() const {
  for (const auto& v : displacement) {
    if (v[0] != 0.0 || v[1] != 0.0 || v[2] != 0.0) return false;
  }
  return true;
}

Dims3 control_grid_dims(const Geometry& grid, double spacing_mm) {
  if (!(spacing_mm > 0.0)) throw ParameterError("elastic spacing must be positive");
  Dims3 out{};
  for (int a = 0; a < 3; ++a) {
    const double step = spacing_mm / grid.voxel_size()[a];
    const double last = static_cast<double>(grid.dims()[a] - 1);
    out[a] = static_cast<std::size_t>(std::floor(last / step + 1e-9)) + 2;
  }
  return out;
}

DisplacementField expand_displacement(const ElasticSample& elastic, const Geometry& grid) {
  DisplacementField f;
  f.dims = grid.dims();
  f.vectors.assign(grid.voxel_count(), Vec3{0, 0, 0});
  DisplacementSampler sampler(elastic, grid);
  if (!sampler.active()) return f;
  const Dims3& d = grid.dims();
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        const Eigen::Vector3d v = sampler.at(x, y, z);
        f.vectors[grid.index(x, y, z)] = {v[0], v[1], v[2]};
      }
    }
  }
  return f;
}

LabelVolume apply_spatial_transform(const LabelVolume& labels, const AffineSample& affine,
                                    const ElasticSample& elastic, const Geometry& output_grid) {
  const Geometry& in = labels.geometry();
  const BackwardMap map(in, output_grid, affine);
  const DisplacementSampler disp(elastic, output_grid);
  const Dims3& nd = output_grid.dims();
  const Dims3& ns = in.dims();
  std::vector<Label> out(output_grid.voxel_count(), 0);
  for (std::size_t z = 0; z < nd[2]; ++z) {
    for (std::size_t y = 0; y < nd[1]; ++y) {
      for (std::size_t x = 0; x < nd[0]; ++x) {
        Eigen::Vector3d s = map(Eigen::Vector3d(x, y, z));
        if (disp.active()) s += map.displacement * disp.at(x, y, z);
        long idx[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          idx[a] = static_cast<long>(std::floor(s[a] + 0.5));
          inside = inside && idx[a] >= 0 && idx[a] < static_cast<long>(ns[a]);
        }
        if (inside) out[output_grid.index(x, y, z)] = labels.at(idx[0], idx[1], idx[2]);
      }
    }
  }
  return LabelVolume(output_grid, std::move(out));
}

LabelVolume apply_spatial_transform(const LabelVolume& labels, const AffineSample& affine,
                                    const ElasticSample& elastic) {
  return apply_spatial_transform(labels, affine, elastic, labels.geometry());
}

ProbVolume apply_spatial_transform(const ProbVolume& prob, const AffineSample& affine,
                                   const ElasticSample& elastic, const Geometry& output_grid) {
  const Geometry& in = prob.geometry();
  const BackwardMap map(in, output_grid, affine);
  const DisplacementSampler disp(elastic, output_grid);
  const Dims3& nd = output_grid.dims();
  const Dims3& ns = in.dims();
  const std::size_t n_out = output_grid.voxel_count();
  const std::size_t n_in = in.voxel_count();
  const std::size_t K = prob.channels();
  std::vector<double> out(n_out * K, 0.0);
  const double* src = prob.values().data();
  for (std::size_t z = 0; z < nd[2]; ++z) {
    for (std::size_t y = 0; y < nd[1]; ++y) {
      for (std::size_t x = 0; x < nd[0]; ++x) {
        Eigen::Vector3d s = map(Eigen::Vector3d(x, y, z));
        if (disp.active()) s += map.displacement * disp.at(x, y, z);
        const std::size_t o = output_grid.index(x, y, z);
        long base[3];
        double f[3];
        for (int a = 0; a < 3; ++a) {
          base[a] = static_cast<long>(std::floor(s[a]));
          f[a] = s[a] - static_cast<double>(base[a]);
        }
        double outside = 0.0;
        for (int c = 0; c < 8; ++c) {
          const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
          const double w = (ox ? f[0] : 1.0 - f[0]) * (oy ? f[1] : 1.0 - f[1]) *
                           (oz ? f[2] : 1.0 - f[2]);
          if (w == 0.0) continue;
          const long px = base[0] + ox, py = base[1] + oy, pz = base[2] + oz;
          if (px < 0 || py < 0 || pz < 0 || px >= static_cast<long>(ns[0]) ||
              py >= static_cast<long>(ns[1]) || pz >= static_cast<long>(ns[2])) {
            outside += w;
            continue;
          }
          const std::size_t v = in.index(px, py, pz);
          for (std::size_t k = 0; k < K; ++k) out[k * n_out + o] += w * src[k * n_in + v];
        }
        out[o] += outside;
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) total += out[k * n_out + o];
        for (std::size_t k = 0; k < K; ++k) {
          out[k * n_out + o] = std::clamp(out[k * n_out + o] / total, 0.0, 1.0);
        }
      }
    }
  }
  return ProbVolume(output_grid, K, std::move(out));
}

ProbVolume apply_spatial_transform(const ProbVolume& prob, const AffineSample& affine,
                                   const ElasticSample& elastic) {
  return apply_spatial_transform(prob, affine, elastic, prob.geometry());
}

}  // namespace forge
