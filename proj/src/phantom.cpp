#include "forge/phantom.hpp"

#include <cmath>
#include <numbers>

#include "forge/rng.hpp"

namespace forge {

namespace {

// Raw labels, see LabelTaxonomy::whole_head().
enum Raw : Label {
  kBackground = 0, kGm = 1, kWm = 2, kCerebellarGm = 3, kCsf = 4, kVentricles = 5,
  kThalamus = 6, kPutamen = 7, kPallidum = 8, kCaudate = 9, kAccumbens = 10,
  kAmygdala = 11, kHippocampus = 12, kSkin = 13, kFat = 14, kMuscle = 15,
  kSalivary = 16, kAir = 17, kMucosa = 18, kEyeball = 19, kBone = 20, kDiploe = 21,
  kDura = 22, kVessel = 23, kGmLeft = 101, kGmRight = 102, kCerebellarWm = 103,
  kChoroid = 104, kSulcalCsf = 105, kTendon = 106,
};

/// Normalized radius of p inside an ellipsoid with semi-axes a centred at c.
double ellipsoid(const Eigen::Vector3d& p, const Eigen::Vector3d& c, const Eigen::Vector3d& a) {
  return ((p - c).array() / a.array()).matrix().norm();
}

}  // namespace

LabelVolume make_head_phantom(const Dims3& dims, const Vec3& voxel_size,
                              std::uint64_t folding_seed) {
  const Vec3 origin{-0.5 * (dims[0] - 1) * voxel_size[0], -0.5 * (dims[1] - 1) * voxel_size[1],
                    -0.5 * (dims[2] - 1) * voxel_size[2]};
  const Geometry g = Geometry::axis_aligned(dims, voxel_size, origin);
  const double fov = std::min({dims[0] * voxel_size[0], dims[1] * voxel_size[1],
                               dims[2] * voxel_size[2]});
  const double s = fov / 48.0;  // geometry below is laid out for a 48 mm field
  const Eigen::Vector3d head(20.5 * s, 22.5 * s, 20.5 * s);
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();

  Rng rng(folding_seed);
  const double fold_a = rng.uniform(5.0, 8.0);
  const double fold_b = rng.uniform(4.0, 7.0);
  const double fold_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // Shell depths from the scalp inwards, in mm.
  const double skin = 0.8 * s, fat = 1.6 * s, muscle = 2.4 * s, bone_out = 3.0 * s,
               diploe = 4.0 * s, bone_in = 4.6 * s, dura = 5.0 * s, csf = 6.0 * s;
  auto shell = [&](double depth) {
    return Eigen::Vector3d(head.array() - depth);
  };

  std::vector<Label> out(g.voxel_count(), kBackground);
  const Dims3& d = dims;
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        const Eigen::Vector3d p = g.to_world(Eigen::Vector3d(x, y, z));
        Label l = kBackground;
        if (ellipsoid(p, zero, head) > 1.0) {
          out[g.index(x, y, z)] = l;
          continue;
        }
        l = kSkin;
        if (ellipsoid(p, zero, shell(skin)) <= 1.0) l = kFat;
        if (ellipsoid(p, zero, shell(fat)) <= 1.0) l = p.z() < 0 ? kMuscle : kFat;
        if (ellipsoid(p, zero, shell(muscle)) <= 1.0) l = kBone;
        if (ellipsoid(p, zero, shell(bone_out)) <= 1.0) l = kDiploe;
        if (ellipsoid(p, zero, shell(diploe)) <= 1.0) l = kBone;
        if (ellipsoid(p, zero, shell(bone_in)) <= 1.0) l = kDura;
        if (ellipsoid(p, zero, shell(dura)) <= 1.0) l = kCsf;

        // Brain with a gyral perturbation of the pial and white surfaces.
        const Eigen::Vector3d q = p.normalized();
        const double theta = std::acos(std::clamp(q.z(), -1.0, 1.0));
        const double phi = std::atan2(q.y(), q.x());
        const double fold = std::sin(fold_a * theta + fold_phase) * std::sin(fold_b * phi);
        const double pial = ellipsoid(p, zero, shell(csf)) * (1.0 - 0.03 * fold);
        const double white = ellipsoid(p, zero, shell(csf + 2.4 * s)) * (1.0 - 0.08 * fold);
        if (pial <= 1.0) l = p.x() < 0 ? kGmLeft : kGmRight;
        if (pial <= 1.0 && pial > 0.97 && fold > 0.6) l = kSulcalCsf;
        if (white <= 1.0) l = kWm;

        // Posterior-inferior cerebellum.
        const Eigen::Vector3d cb(0.0, -9.0 * s, -8.0 * s);
        const double rcb = ellipsoid(p, cb, Eigen::Vector3d(9.0, 5.5, 4.5) * s);
        if (rcb <= 1.0 && pial <= 1.0) l = rcb < 0.45 ? kCerebellarWm : kCerebellarGm;

        // Deep structures.
        auto inside = [&](Eigen::Vector3d c, Eigen::Vector3d a) {
          return ellipsoid(p, c * s, a * s) <= 1.0;
        };
        for (double side : {-1.0, 1.0}) {
          if (inside({side * 3.5, 1.0, 3.0}, {1.6, 5.0, 1.8})) l = kVentricles;
          if (inside({side * 3.6, 2.5, 3.4}, {0.6, 1.5, 0.6})) l = kChoroid;
          if (inside({side * 2.2, -2.0, 0.5}, {1.8, 2.4, 1.6})) l = kThalamus;
          if (inside({side * 7.0, 2.5, 0.5}, {1.4, 2.8, 1.8})) l = kPutamen;
          if (inside({side * 5.4, 2.0, 0.2}, {0.8, 1.6, 1.2})) l = kPallidum;
          if (inside({side * 5.2, 6.0, 2.6}, {1.0, 1.8, 1.2})) l = kCaudate;
          if (inside({side * 4.0, 6.8, -0.8}, {0.8, 0.8, 0.7})) l = kAccumbens;
          if (inside({side * 9.0, -1.0, -4.0}, {1.2, 3.2, 1.0})) l = kHippocampus;
          if (inside({side * 9.0, 2.8, -3.8}, {1.1, 1.2, 1.0})) l = kAmygdala;
          // Eyes and salivary glands sit in the scalp-skull compartment.
          if (inside({side * 8.0, 17.5, -6.0}, {3.0, 3.0, 3.0})) l = kEyeball;
          if (inside({side * 13.0, 4.0, -15.0}, {3.0, 4.0, 2.5})) l = kSalivary;
          if (inside({side * 15.0, 0.0, -11.0}, {1.0, 2.0, 1.0})) l = kTendon;
        }
        // Sinus: mucosa-lined air cavity, anterior-inferior midline.
        if (inside({0.0, 15.0, -12.0}, {4.0, 3.5, 3.0})) l = kMucosa;
        if (inside({0.0, 15.0, -12.0}, {3.0, 2.5, 2.0})) l = kAir;
        // Superior sagittal sinus between dura and brain.
        const Eigen::Vector3d top = shell(csf - 0.5 * s);
        const double rv = std::hypot(p.x() / (0.7 * s), (p.z() - (top.z() - 0.3 * s)) / (0.7 * s));
        if (rv <= 1.0 && std::abs(p.y()) < 14.0 * s) l = kVessel;
        out[g.index(x, y, z)] = l;
      }
    }
  }
  return LabelVolume(g, std::move(out));
}

}  // namespace forge
