#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <zlib.h>

#include "forge/error.hpp"
#include "forge/nifti.hpp"
#include "forge/taxonomy.hpp"
#include "test_util.hpp"

using namespace forge;
using forge::test::cube_grid;
using forge::test::scratch_dir;

TEST_CASE("geometry validates and reports voxel size from affine columns") {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  a(0, 0) = 0.0;
  a(1, 0) = 0.5;  // x axis mapped onto world y with 0.5 mm spacing
  a(0, 1) = -0.75;
  a(1, 1) = 0.0;
  a(2, 2) = 2.0;
  const Geometry g({4, 5, 6}, a);
  CHECK(g.voxel_size()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.voxel_size()[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(g.voxel_size()[2] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.voxel_volume() == doctest::Approx(0.75));
  const Eigen::Vector3d p(1.0, 2.0, 3.0);
  CHECK((g.to_voxel(g.to_world(p)) - p).norm() < 1e-12);

  Eigen::Matrix4d singular = Eigen::Matrix4d::Identity();
  singular(2, 2) = 0.0;
  CHECK_THROWS_AS(Geometry({2, 2, 2}, singular), PreconditionError);
  CHECK_THROWS_AS(Geometry::axis_aligned({0, 2, 2}, {1, 1, 1}), PreconditionError);
}

TEST_CASE("volumes reject wrong data length and invalid partial volumes") {
  const Geometry g = cube_grid(2);
  CHECK_THROWS_AS(LabelVolume(g, std::vector<Label>(7)), ShapeError);
  std::vector<double> pv(16, 0.5);
  CHECK_NOTHROW(ProbVolume(g, 2, pv));
  pv[0] = 0.7;  // voxel 0 sums to 1.2
  CHECK_THROWS_AS(ProbVolume(g, 2, pv), PreconditionError);
  std::vector<double> neg(16, 0.5);
  neg[0] = -0.5;
  neg[8] = 1.5;
  CHECK_THROWS_AS(ProbVolume(g, 2, neg), PreconditionError);
}

TEST_CASE("label round trip through NIfTI is exact") {
  const auto dir = scratch_dir("vol_labels");
  const LabelVolume v = test::labels_from(cube_grid(2), [](auto x, auto y, auto z) {
    return static_cast<Label>((x + y + z) % 2);
  });
  save_volume(v, dir / "a.nii.gz");
  const LabelVolume r = load_label_volume(dir / "a.nii.gz");
  CHECK(r.geometry().dims() == Dims3{2, 2, 2});
  CHECK(r.geometry().voxel_size() == Vec3{1, 1, 1});
  CHECK(r == v);

  const LabelVolume big = test::random_labels(Geometry::axis_aligned({7, 5, 3}, {0.5, 0.6, 0.7}, {1, 2, 3}), 300, 4);
  save_volume(big, dir / "b.nii");
  const LabelVolume rb = load_label_volume(dir / "b.nii");
  CHECK(rb == big);
  CHECK((rb.geometry().affine() - big.geometry().affine()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("intensity round trip within float32 precision") {
  const auto dir = scratch_dir("vol_intensity");
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::vector<float> data(512);
  for (auto& x : data) x = u(rng);
  const IntensityVolume v(cube_grid(8, 0.75), data);
  save_volume(v, dir / "i.nii.gz");
  const IntensityVolume r = load_intensity_volume(dir / "i.nii.gz");
  double worst = 0;
  for (std::size_t i = 0; i < data.size(); ++i) worst = std::max(worst, double(std::abs(r[i] - v[i])));
  CHECK(worst <= 1e-6);
}

TEST_CASE("partial volumes are stored as 4D") {
  const auto dir = scratch_dir("vol_pv");
  const Geometry g = cube_grid(8);
  const LabelVolume l = test::random_labels(g, 4, 9);
  const ProbVolume pv = one_hot_classes(l, 4);
  save_volume(pv, dir / "pv.nii.gz");
  const NiftiInfo info = read_nifti_info(dir / "pv.nii.gz");
  CHECK(info.ndim == 4);
  CHECK(info.dim[3] == 4);
  const ProbVolume r = load_prob_volume(dir / "pv.nii.gz");
  CHECK(r.channels() == 4);
  CHECK(argmax_labels(r) == l);
}

TEST_CASE("fractional values and malformed headers are rejected") {
  const auto dir = scratch_dir("vol_errors");
  const IntensityVolume frac(cube_grid(2), std::vector<float>(8, 1.5f));
  save_volume(frac, dir / "f.nii");
  CHECK_THROWS_AS(load_label_volume(dir / "f.nii"), DatatypeError);

  {
    std::ofstream out(dir / "junk.nii", std::ios::binary);
    out << std::string(400, 'x');
  }
  CHECK_THROWS_AS(load_label_volume(dir / "junk.nii"), FormatError);
  CHECK_THROWS_AS(load_label_volume(dir / "missing.nii"), IoError);
  // A regular file where a directory is needed.
  CHECK_THROWS_AS(save_volume(frac, dir / "junk.nii" / "x.nii"), IoError);
}

TEST_CASE("non-canonical orientation is reoriented on load, world positions kept") {
  const auto dir = scratch_dir("vol_orient");
  // x axis flipped, y and z swapped.
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a(0, 0) = -0.5;
  a(2, 1) = 0.75;
  a(1, 2) = 1.0;
  a(3, 3) = 1.0;
  a.block<3, 1>(0, 3) = Eigen::Vector3d(10, -3, 4);
  const Geometry g({5, 4, 3}, a);
  const LabelVolume v = test::random_labels(g, 50, 21);
  save_volume(v, dir / "o.nii.gz");
  const LabelVolume r = load_label_volume(dir / "o.nii.gz");
  const Eigen::Matrix3d lin = r.geometry().affine().block<3, 3>(0, 0);
  CHECK(lin.isDiagonal(1e-9));
  CHECK(lin.diagonal().minCoeff() > 0);
  const Dims3& d = r.geometry().dims();
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        const Eigen::Vector3d src = g.to_voxel(r.geometry().to_world(Eigen::Vector3d(x, y, z)));
        const auto sx = static_cast<std::size_t>(std::lround(src.x()));
        const auto sy = static_cast<std::size_t>(std::lround(src.y()));
        const auto sz = static_cast<std::size_t>(std::lround(src.z()));
        REQUIRE((src - Eigen::Vector3d(sx, sy, sz)).norm() < 1e-6);
        CHECK(r.at(x, y, z) == v.at(sx, sy, sz));
      }
}

TEST_CASE("one_hot follows the taxonomy mapping") {
  // raw 3 -> class 2 of K=4
  const LabelTaxonomy tax({{0, "bg"}, {1, "a"}, {2, "b"}, {3, "c"}},
                          {{0, 0}, {1, 1}, {3, 2}, {7, 3}}, {});
  const LabelVolume single(cube_grid(1), std::vector<Label>{3});
  const ProbVolume p = one_hot(single, tax);
  CHECK(p.channels() == 4);
  CHECK(p.at(0, 0) == 0.0);
  CHECK(p.at(1, 0) == 0.0);
  CHECK(p.at(2, 0) == 1.0);
  CHECK(p.at(3, 0) == 0.0);

  const ProbVolume bg = one_hot(LabelVolume(cube_grid(3), Label{0}), tax);
  for (std::size_t v = 0; v < 27; ++v) {
    CHECK(bg.at(0, v) == 1.0);
    CHECK(bg.at(1, v) + bg.at(2, v) + bg.at(3, v) == 0.0);
  }

  const LabelVolume two = test::labels_from(cube_grid(4), [](auto x, auto, auto) {
    return static_cast<Label>(x < 2 ? 1 : 7);
  });
  CHECK(argmax_labels(one_hot(two, tax)) == map_labels(two, tax));

  const LabelVolume bad(cube_grid(2), std::vector<Label>{0, 0, 0, 0, 0, 5, 0, 0});
  try {
    one_hot(bad, tax);
    FAIL("expected TaxonomyError");
  } catch (const TaxonomyError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("5") != std::string::npos);
    CHECK(msg.find("voxel") != std::string::npos);
  }
}

TEST_CASE("argmax ties go to the lowest class id") {
  const Geometry g = cube_grid(1);
  CHECK(argmax_labels(ProbVolume(g, 2, {0.5, 0.5}))[0] == 0);
  CHECK(argmax_labels(ProbVolume(g, 3, {0.2, 0.3, 0.5}))[0] == 2);
  CHECK(argmax_labels(ProbVolume(g, 3, {0.1, 0.45, 0.45}))[0] == 1);
}

TEST_CASE("argmax inverts one_hot for random volumes") {
  const LabelTaxonomy tax = LabelTaxonomy::whole_head();
  std::vector<Label> raw = tax.raw_labels();
  std::mt19937 rng(5);
  std::vector<Label> data(6 * 6 * 6);
  for (auto& x : data) x = raw[rng() % raw.size()];
  const LabelVolume v(cube_grid(6), data);
  CHECK(argmax_labels(one_hot(v, tax)) == map_labels(v, tax));
}

TEST_CASE("whole-head taxonomy layout") {
  const LabelTaxonomy tax = LabelTaxonomy::whole_head();
  CHECK(tax.class_count() == 24);
  CHECK(tax.class_name(0) == "background");
  // 12 brain tissues followed by 11 extra-cerebral ones.
  CHECK(tax.class_id("hippocampus").value() == 12);
  CHECK(tax.class_id("vessel").value() == 23);
  const Label wm = *tax.class_id("white_matter");
  const Label gm = *tax.class_id("gray_matter");
  const Label csf = *tax.class_id("csf");
  bool wm_into_gm = false, csf_into_vessel = false;
  for (const auto& r : tax.morph_rules()) {
    auto has = [&](Label n) { return std::find(r.neighbors.begin(), r.neighbors.end(), n) != r.neighbors.end(); };
    if (r.source == wm && r.mode == MorphMode::dilate && has(gm)) wm_into_gm = true;
    if (r.source == csf && r.mode == MorphMode::dilate && has(*tax.class_id("vessel"))) csf_into_vessel = true;
  }
  CHECK(wm_into_gm);
  CHECK(csf_into_vessel);
}

TEST_CASE("taxonomy JSON round trip and validation") {
  const LabelTaxonomy tax = LabelTaxonomy::whole_head();
  const LabelTaxonomy back = LabelTaxonomy::from_json(tax.to_json());
  CHECK(back.to_json() == tax.to_json());

  nlohmann::json bad = tax.to_json();
  bad["morph_rules"][0]["neighbors"].push_back("no_such_tissue");
  CHECK_THROWS_AS(LabelTaxonomy::from_json(bad), TaxonomyError);

  nlohmann::json gap = {{"classes", {{{"id", 0}, {"name", "bg"}}, {{"id", 2}, {"name", "x"}}}},
                        {"raw_to_class", nlohmann::json::object()}};
  CHECK_THROWS_AS(LabelTaxonomy::from_json(gap), TaxonomyError);

  nlohmann::json unmapped_target = {{"classes", {{{"id", 0}, {"name", "bg"}}}},
                                    {"raw_to_class", {{"4", 3}}}};
  CHECK_THROWS_AS(LabelTaxonomy::from_json(unmapped_target), TaxonomyError);
}
