#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "forge/error.hpp"
#include "forge/generate.hpp"
#include "forge/phantom.hpp"
#include "test_util.hpp"

using namespace forge;

namespace {

const LabelTaxonomy& taxonomy() {
  static const LabelTaxonomy t = LabelTaxonomy::whole_head();
  return t;
}

const PreparedTemplate& small_template() {
  static const PreparedTemplate t = [] {
    GeneratorConfig cfg;
    return prepare_template(make_head_phantom({36, 36, 36}, {0.5, 0.5, 0.5}, 1), taxonomy(), cfg, "phantom");
  }();
  return t;
}

GeneratorConfig quiet_config() {
  GeneratorConfig cfg;
  cfg.artifacts.bias.enabled = false;
  cfg.artifacts.motion_enabled = false;
  cfg.artifacts.noise_enabled = false;
  cfg.shape.morph_probability = 0.0;
  cfg.shape.affine_enabled = false;
  cfg.shape.elastic_enabled = false;
  cfg.contrast.std_min = cfg.contrast.std_max = 0.001;
  return cfg;
}

}  // namespace

TEST_CASE("phantom covers the whole-head raw labels") {
  const LabelVolume p = make_head_phantom({64, 64, 64}, {0.75, 0.75, 0.75});
  std::set<Label> present(p.values().begin(), p.values().end());
  CHECK(present.size() >= 24);
  const LabelVolume classes = map_labels(p, taxonomy());
  std::set<Label> cls(classes.values().begin(), classes.values().end());
  CHECK(cls.size() == 24);
  CHECK(!(make_head_phantom({32, 32, 32}, {1, 1, 1}, 1) == make_head_phantom({32, 32, 32}, {1, 1, 1}, 2)));
}

TEST_CASE("prepared template sits on the superres grid") {
  const PreparedTemplate& t = small_template();
  CHECK(t.classes.geometry().dims() == Dims3{72, 72, 72});
  CHECK(t.classes.geometry().voxel_size()[0] == doctest::Approx(0.25));
  GeneratorConfig cfg;
  CHECK(cfg.pool_factor() == 3);
  cfg.train_resolution_mm = 0.6;
  CHECK_THROWS_AS(cfg.pool_factor(), ConfigError);
}

TEST_CASE("generate_sample invariants and determinism") {
  GeneratorConfig cfg;
  const GeneratedSample a = generate_sample(small_template(), taxonomy(), cfg, 1234);
  const GeneratedSample b = generate_sample(small_template(), taxonomy(), cfg, 1234);
  CHECK(a.image == b.image);
  CHECK(a.labels == b.labels);
  CHECK(std::equal(a.pv.values().begin(), a.pv.values().end(), b.pv.values().begin()));
  CHECK(to_json(a.recipe) == to_json(b.recipe));

  CHECK(a.image.geometry().dims() == Dims3{24, 24, 24});
  for (float v : a.image.values()) {
    REQUIRE(std::isfinite(v));
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
  }
  const std::size_t n = a.pv.geometry().voxel_count();
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0;
    for (std::size_t k = 0; k < a.pv.channels(); ++k) s += a.pv.at(k, v);
    REQUIRE(std::abs(s - 1.0) <= 1e-6);
  }
  CHECK(a.labels == argmax_labels(a.pv));

  const GeneratedSample c = generate_sample(small_template(), taxonomy(), cfg, 1235);
  CHECK(!(c.image == a.image));
}

TEST_CASE("replaying a serialized recipe is bit-identical") {
  GeneratorConfig cfg;
  const GeneratedSample a = generate_sample(small_template(), taxonomy(), cfg, 77);
  const GenerationRecipe r = recipe_from_json(nlohmann::json::parse(to_json(a.recipe).dump()));
  const GeneratedSample b = generate_from_recipe(small_template(), taxonomy(), cfg, r);
  CHECK(a.image == b.image);
  CHECK(a.labels == b.labels);
}

TEST_CASE("without augmentations, pure-class regions carry the sampled means") {
  const GeneratorConfig cfg = quiet_config();
  const std::uint64_t seed = 4242;
  const GeneratedSample s = generate_sample(small_template(), taxonomy(), cfg, seed);
  // The final image is the min-max normalized render.
  const IntensityVolume raw = render_image(s.pv, s.recipe.contrast, stage_seed(seed, Stage::render));
  CHECK(normalize_min_max(raw) == s.image);
  const auto [lo, hi] = std::minmax_element(raw.values().begin(), raw.values().end());
  const double scale = double(*hi) - double(*lo);
  std::vector<double> sum(taxonomy().class_count(), 0.0);
  std::vector<std::size_t> count(taxonomy().class_count(), 0);
  const std::size_t n = s.pv.geometry().voxel_count();
  for (std::size_t v = 0; v < n; ++v) {
    const Label k = s.labels[v];
    if (s.pv.at(k, v) != 1.0) continue;
    sum[k] += double(s.image[v]) * scale + *lo;  // undo normalization
    ++count[k];
  }
  int checked = 0;
  for (std::size_t k = 0; k < sum.size(); ++k) {
    if (count[k] < 10) continue;
    CHECK(std::abs(sum[k] / double(count[k]) - s.recipe.contrast.means[k]) <= 0.002);
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("stage failures name the stage and seed") {
  GeneratorConfig cfg;
  GenerationRecipe r = generate_sample(small_template(), taxonomy(), cfg, 9).recipe;
  r.contrast.means.pop_back();
  r.contrast.stds.pop_back();
  try {
    generate_from_recipe(small_template(), taxonomy(), cfg, r);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("render") != std::string::npos);
    CHECK(msg.find("seed 9") != std::string::npos);
  }
}

TEST_CASE("crop mode produces the requested field of view") {
  GeneratorConfig cfg;
  cfg.crop = 16;
  const LabelVolume raw = make_head_phantom({64, 64, 64}, {0.5, 0.5, 0.5}, 3);
  const PreparedTemplate t = prepare_template(raw, taxonomy(), cfg, "p");
  // 1.5x of a 12 mm field = 18 mm = 36 raw voxels, upsampled to 0.25 mm.
  CHECK(t.classes.geometry().dims()[0] <= 80);
  const Geometry og = output_grid(t, cfg);
  CHECK(og.dims() == Dims3{48, 48, 48});
  CHECK((og.center_world() - raw.geometry().center_world()).norm() < 0.26);
  const GeneratedSample s = generate_sample(t, taxonomy(), cfg, 5);
  CHECK(s.image.geometry().dims() == Dims3{16, 16, 16});
  CHECK(s.labels == argmax_labels(s.pv));
}
