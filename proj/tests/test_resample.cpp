#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "forge/error.hpp"
#include "forge/resample.hpp"
#include "test_util.hpp"

using namespace forge;
using forge::test::cube_grid;

namespace {

IntensityVolume field(const Geometry& g, auto&& f) {
  const Dims3& d = g.dims();
  std::vector<float> v(g.voxel_count());
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) v[g.index(x, y, z)] = static_cast<float>(f(x, y, z));
  return IntensityVolume(g, std::move(v));
}

double sum(const IntensityVolume& v) {
  double s = 0;
  for (float x : v.values()) s += x;
  return s;
}

ResampleSpec spec_to(double vs, Interpolation interp = Interpolation::windowed_sinc) {
  ResampleSpec s;
  s.target_voxel_size = {vs, vs, vs};
  s.interpolation = interp;
  return s;
}

/// Mass per class in mm^3 by direct summation.
std::vector<double> class_mass(const ProbVolume& p) {
  std::vector<double> m(p.channels(), 0.0);
  for (std::size_t k = 0; k < p.channels(); ++k)
    for (double x : p.channel(k)) m[k] += x;
  for (auto& x : m) x *= p.geometry().voxel_volume();
  return m;
}

}  // namespace

TEST_CASE("lanczos kernel") {
  CHECK(lanczos(0.0) == 1.0);
  for (int i = 1; i <= 5; ++i) CHECK(std::abs(lanczos(double(i))) < 1e-15);
  CHECK(lanczos(4.5) == 0.0);
  const double x = 0.37;
  const double pi = std::numbers::pi;
  const double expect = std::sin(pi * x) / (pi * x) * std::sin(pi * x / 4) / (pi * x / 4);
  CHECK(lanczos(x) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("resampled geometry keeps the field of view") {
  const Geometry src = Geometry::axis_aligned({10, 12, 7}, {0.5, 0.5, 0.75}, {3, -2, 1});
  const Geometry dst = resampled_geometry(src, {0.25, 0.25, 0.25});
  CHECK(dst.dims() == Dims3{20, 24, 21});
  // First voxel's low edge coincides: origin - vs/2 equal.
  const Eigen::Vector3d lo_src = src.to_world(Eigen::Vector3d::Constant(-0.5));
  const Eigen::Vector3d lo_dst = dst.to_world(Eigen::Vector3d::Constant(-0.5));
  CHECK((lo_src - lo_dst).norm() < 1e-12);
}

TEST_CASE("resample_channel reproduces constants, identity and ramps") {
  const Geometry g = cube_grid(16, 1.0);
  for (auto interp : {Interpolation::windowed_sinc, Interpolation::linear, Interpolation::nearest}) {
    const IntensityVolume c = resample_channel(field(g, [](auto...) { return 0.625; }), spec_to(0.5, interp));
    for (float v : c.values()) CHECK(v == doctest::Approx(0.625).epsilon(1e-6));
  }

  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0, 1);
  const IntensityVolume rnd = field(g, [&](auto...) { return u(rng); });
  const IntensityVolume same = resample_channel(rnd, spec_to(1.0));
  double worst = 0;
  for (std::size_t i = 0; i < rnd.size(); ++i) worst = std::max(worst, double(std::abs(same[i] - rnd[i])));
  CHECK(worst < 1e-5);

  // f(x) = 0.05 x; target sample o sits at source coordinate (o + 0.5) / 2 - 0.5.
  const IntensityVolume ramp = field(g, [](auto x, auto, auto) { return 0.05 * double(x); });
  const IntensityVolume up = resample_channel(ramp, spec_to(0.5));
  const Dims3& d = up.geometry().dims();
  double ramp_err = 0;
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        const double s = (x + 0.5) * 0.5 - 0.5;
        if (s < 4.0 || s > 11.0) continue;  // 4-voxel border margin
        ramp_err = std::max(ramp_err, std::abs(up.at(x, y, z) - 0.05 * s));
      }
  CHECK(ramp_err < 1e-3);
}

TEST_CASE("gaussian_smooth: identity, impulse response, constants, mass, linearity") {
  const Geometry g = cube_grid(21, 1.0);
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> u(0, 1);
  const IntensityVolume a = field(g, [&](auto...) { return u(rng); });
  const IntensityVolume b = field(g, [&](auto...) { return u(rng); });

  CHECK(gaussian_smooth(a, 0.0) == a);

  const IntensityVolume delta = field(g, [](auto x, auto y, auto z) { return x == 10 && y == 10 && z == 10 ? 1.0 : 0.0; });
  const IntensityVolume h = gaussian_smooth(delta, 1.0);
  // Analytic kernel: exp(-i^2 / 2) normalised over the radius-4 support.
  double norm = 0;
  for (int i = -4; i <= 4; ++i) norm += std::exp(-0.5 * i * i);
  auto g1 = [&](int i) { return std::abs(i) > 4 ? 0.0 : std::exp(-0.5 * i * i) / norm; };
  double worst = 0;
  for (int dz = -6; dz <= 6; ++dz)
    for (int dy = -6; dy <= 6; ++dy)
      for (int dx = -6; dx <= 6; ++dx) {
        const double expect = g1(dx) * g1(dy) * g1(dz);
        worst = std::max(worst, std::abs(h.at(10 + dx, 10 + dy, 10 + dz) - expect));
      }
  CHECK(worst < 1e-4);

  const IntensityVolume c = gaussian_smooth(field(g, [](auto...) { return 0.3; }), 0.5);
  for (float v : c.values()) CHECK(v == doctest::Approx(0.3).epsilon(1e-6));

  const IntensityVolume sa = gaussian_smooth(a, 1.7);
  CHECK(std::abs(sum(sa) - sum(a)) / sum(a) < 1e-4);

  const IntensityVolume ab = field(g, [&](auto x, auto y, auto z) { return 0.3 * a.at(x, y, z) + 1.2 * b.at(x, y, z); });
  const IntensityVolume sb = gaussian_smooth(b, 1.7);
  const IntensityVolume sab = gaussian_smooth(ab, 1.7);
  double lin = 0;
  for (std::size_t i = 0; i < a.size(); ++i) lin = std::max(lin, std::abs(sab[i] - (0.3 * sa[i] + 1.2 * sb[i])));
  CHECK(lin < 1e-5);
}

TEST_CASE("gaussian kernel taps") {
  const auto k = gaussian_kernel(0.5 / 0.25);
  CHECK(k.size() == 17);  // radius ceil(4 * 2) = 8
  double s = 0;
  for (float w : k) s += w;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pool_partial_volume examples") {
  const Geometry g3 = cube_grid(3, 0.25);
  const ProbVolume full = one_hot_classes(LabelVolume(g3, Label{1}), 2);
  const ProbVolume p = pool_partial_volume(full, {});
  CHECK(p.geometry().voxel_count() == 1);
  CHECK(p.at(1, 0) == 1.0);
  CHECK(p.geometry().voxel_size()[0] == doctest::Approx(0.75));

  const LabelVolume nine = test::labels_from(g3, [](auto, auto, auto z) { return Label(z == 0 ? 1 : 0); });
  const ProbVolume q = pool_partial_volume(one_hot_classes(nine, 2), {});
  CHECK(q.at(1, 0) == doctest::Approx(9.0 / 27.0).epsilon(1e-15));
  CHECK(q.at(0, 0) == doctest::Approx(18.0 / 27.0).epsilon(1e-15));
}

TEST_CASE("pooling conserves per-class mass") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProbVolume pv = one_hot_classes(test::random_labels(cube_grid(12, 0.25), 5, seed), 5);
    const auto before = class_mass(pv);
    const ProbVolume pooled = pool_partial_volume(pv, {});
    const auto after = class_mass(pooled);
    for (std::size_t k = 0; k < before.size(); ++k) {
      CHECK(std::abs(after[k] - before[k]) <= 1e-9 * before[k]);
    }
    // The fused label path gives the same numbers.
    const ProbVolume fused = pool_labels(test::random_labels(cube_grid(12, 0.25), 5, seed), 5, {});
    CHECK(std::equal(fused.values().begin(), fused.values().end(), pooled.values().begin()));
  }
}

TEST_CASE("pooling pads the high side with background") {
  const Geometry g = Geometry::axis_aligned({7, 6, 5}, {0.25, 0.25, 0.25});
  const LabelVolume l = test::random_labels(g, 3, 8);
  const ProbVolume pv = one_hot_classes(l, 3);
  const ProbVolume pooled = pool_partial_volume(pv, {});
  CHECK(pooled.geometry().dims() == Dims3{3, 2, 2});
  const auto before = class_mass(pv);
  const auto after = class_mass(pooled);
  CHECK(std::abs(after[1] - before[1]) <= 1e-12);
  CHECK(std::abs(after[2] - before[2]) <= 1e-12);
  const double padded = (9.0 * 6 * 6 - 7.0 * 6 * 5) * g.voxel_volume();
  CHECK(after[0] == doctest::Approx(before[0] + padded).epsilon(1e-12));
  // Pooled voxel centre = centroid of its source block.
  const Eigen::Vector3d c = pooled.geometry().to_world(Eigen::Vector3d::Zero());
  CHECK((c - g.to_world(Eigen::Vector3d(1, 1, 1))).norm() < 1e-12);
}

TEST_CASE("superresolve_labels: constants, precondition") {
  const LabelTaxonomy tax = test::simple_taxonomy(3);
  const LabelVolume c(cube_grid(6, 0.5), Label{2});
  const LabelVolume up = superresolve_labels(c, tax, spec_to(0.25));
  CHECK(up.geometry().dims() == Dims3{12, 12, 12});
  for (Label v : up.values()) CHECK(v == 2);
  CHECK_THROWS_AS(superresolve_labels(c, tax, spec_to(0.75)), PreconditionError);
}

TEST_CASE("superresolve_labels preserves sphere volume") {
  const double r = 10.0;
  const Geometry g = Geometry::axis_aligned({48, 48, 48}, {0.5, 0.5, 0.5}, {-11.75, -11.75, -11.75});
  const LabelVolume sphere = test::labels_from(g, [&](auto x, auto y, auto z) {
    return Label(g.to_world(Eigen::Vector3d(x, y, z)).norm() <= r ? 1 : 0);
  });
  const LabelVolume up = superresolve_labels(sphere, test::simple_taxonomy(2), spec_to(0.25));
  auto volume = [](const LabelVolume& v) {
    return double(std::count(v.values().begin(), v.values().end(), Label{1})) * v.geometry().voxel_volume();
  };
  const double v0 = volume(sphere), v1 = volume(up);
  CHECK(std::abs(v1 - v0) / v0 < 0.02);
  CHECK(std::abs(v1 - 4.0 / 3.0 * std::numbers::pi * r * r * r) / v0 < 0.02);
}

TEST_CASE("superresolve_labels keeps a tilted plane within 0.25 mm") {
  const Eigen::Vector3d n = Eigen::Vector3d(1.0, 0.3, 0.2).normalized();
  const double offset = 0.37;
  const Geometry g = Geometry::axis_aligned({32, 32, 32}, {0.5, 0.5, 0.5}, {-7.75, -7.75, -7.75});
  const LabelVolume half = test::labels_from(g, [&](auto x, auto y, auto z) {
    return Label(n.dot(g.to_world(Eigen::Vector3d(x, y, z))) < offset ? 1 : 0);
  });
  const LabelVolume up = superresolve_labels(half, test::simple_taxonomy(2), spec_to(0.25));
  const Geometry& ug = up.geometry();
  const Dims3& d = ug.dims();
  // Boundary points: midpoint between a class-1 voxel and its +x class-0 neighbour.
  std::vector<Eigen::Vector3d> pts;
  for (std::size_t z = 12; z + 12 < d[2]; ++z)
    for (std::size_t y = 12; y + 12 < d[1]; ++y)
      for (std::size_t x = 0; x + 1 < d[0]; ++x)
        if (up.at(x, y, z) == 1 && up.at(x + 1, y, z) == 0)
          pts.push_back(ug.to_world(Eigen::Vector3d(x + 0.5, y, z)));
  REQUIRE(pts.size() > 100);
  // Least-squares fit x = a + b y + c z.
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd rhs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    A.row(i) << 1.0, pts[i].y(), pts[i].z();
    rhs(i) = pts[i].x();
  }
  const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(rhs);
  // Analytic plane n.p = offset => x = offset/nx - (ny/nx) y - (nz/nx) z.
  CHECK(std::abs(coef(0) - offset / n.x()) * n.x() < 0.25);
  CHECK(std::abs(coef(1) + n.y() / n.x()) < 0.05);
  CHECK(std::abs(coef(2) + n.z() / n.x()) < 0.05);
}

TEST_CASE("superresolve then pool recovers interior labels") {
  const Geometry g = cube_grid(14, 0.75);
  const LabelVolume src = test::labels_from(g, [&](auto x, auto y, auto z) {
    const double dx = x - 6.5, dy = y - 6.0, dz = z - 7.0;
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    return Label(r < 3.2 ? 2 : r < 5.5 ? 1 : 0);
  });
  const LabelVolume up = superresolve_labels(src, test::simple_taxonomy(3), spec_to(0.25));
  const LabelVolume back = argmax_labels(pool_labels(up, 3, {}));
  REQUIRE(back.geometry().dims() == g.dims());
  std::size_t interior = 0;
  for (std::size_t z = 1; z + 1 < 14; ++z)
    for (std::size_t y = 1; y + 1 < 14; ++y)
      for (std::size_t x = 1; x + 1 < 14; ++x) {
        bool uniform = true;
        for (int k = -1; k <= 1; ++k)
          for (int j = -1; j <= 1; ++j)
            for (int i = -1; i <= 1; ++i)
              uniform = uniform && src.at(x + i, y + j, z + k) == src.at(x, y, z);
        if (!uniform) continue;
        ++interior;
        CHECK(back.at(x, y, z) == src.at(x, y, z));
      }
  CHECK(interior > 300);
}
