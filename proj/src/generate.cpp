#include "forge/generate.hpp"

#include <cmath>
#include <functional>

#include "forge/error.hpp"

namespace forge {

std::size_t GeneratorConfig::pool_factor() const {
  if (!(superres_resolution_mm > 0.0) || !(train_resolution_mm > 0.0)) {
    throw ConfigError("resolutions must be positive");
  }
  const double ratio = train_resolution_mm / superres_resolution_mm;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6) {
    throw ConfigError("train resolution " + std::to_string(train_resolution_mm) +
                      " mm is not an integer multiple of superres resolution " +
                      std::to_string(superres_resolution_mm) + " mm");
  }
  return static_cast<std::size_t>(rounded);
}

void GeneratorConfig::validate() const {
  if (superres_resolution_mm > train_resolution_mm) {
    throw ConfigError("superres_resolution_mm must not exceed target_train_resolution_mm");
  }
  pool_factor();
  if (!(smoothing_sigma_mm >= 0.0)) throw ConfigError("smoothing_sigma_mm must be >= 0");
  shape.validate();
  contrast.validate();
  artifacts.validate();
}

nlohmann::json to_json(const GenerationRecipe& r) {
  return {{"template_id", r.template_id},
          {"rng_seed", r.rng_seed},
          {"shape", to_json(r.shape)},
          {"contrast", to_json(r.contrast)},
          {"artifacts", to_json(r.artifacts)}};
}

GenerationRecipe recipe_from_json(const nlohmann::json& j) {
  try {
    GenerationRecipe r;
    r.template_id = j.at("template_id").get<std::string>();
    r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    r.shape = shape_recipe_from_json(j.at("shape"));
    r.contrast = contrast_from_json(j.at("contrast"));
    r.artifacts = artifacts_from_json(j.at("artifacts"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed recipe: ") + e.what());
  }
}

namespace {

/// Centred sub-block of `raw` covering `half_extent_mm` around the grid centre
/// on every axis, clipped to the grid.
LabelVolume crop_centred(const LabelVolume& raw, double half_extent_mm) {
  const Geometry& g = raw.geometry();
  const Dims3& n = g.dims();
  const Vec3 vs = g.voxel_size();
  Dims3 lo{}, hi{};
  bool whole = true;
  for (int a = 0; a < 3; ++a) {
    const double c = 0.5 * (static_cast<double>(n[a]) - 1.0);
    const double h = half_extent_mm / vs[a];
    lo[a] = static_cast<std::size_t>(std::max(0.0, std::floor(c - h)));
    hi[a] = static_cast<std::size_t>(std::min(static_cast<double>(n[a]), std::ceil(c + h) + 1.0));
    whole = whole && lo[a] == 0 && hi[a] == n[a];
  }
  if (whole) return raw;
  const Dims3 dims{hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};
  Eigen::Matrix4d affine = g.affine();
  affine.block<3, 1>(0, 3) =
      g.to_world(Eigen::Vector3d(double(lo[0]), double(lo[1]), double(lo[2])));
  std::vector<Label> out;
  out.reserve(dims[0] * dims[1] * dims[2]);
  for (std::size_t z = lo[2]; z < hi[2]; ++z)
    for (std::size_t y = lo[1]; y < hi[1]; ++y)
      for (std::size_t x = lo[0]; x < hi[0]; ++x) out.push_back(raw.at(x, y, z));
  return LabelVolume(Geometry(dims, affine), std::move(out));
}

bool at_spacing(const Geometry& g, double mm) {
  const Vec3 vs = g.voxel_size();
  return std::abs(vs[0] - mm) < 1e-6 && std::abs(vs[1] - mm) < 1e-6 &&
         std::abs(vs[2] - mm) < 1e-6;
}

template <class F>
auto run_stage(const char* stage, std::uint64_t seed, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string("stage ") + stage + " failed (seed " + std::to_string(seed) +
                     "): " + e.what());
  }
}

}  // namespace

PreparedTemplate prepare_template(const LabelVolume& raw, const LabelTaxonomy& taxonomy,
                                  const GeneratorConfig& config, std::string id) {
  const LabelVolume* source = &raw;
  LabelVolume cropped;
  if (config.crop > 0) {
    const double fov = static_cast<double>(config.crop) * config.train_resolution_mm;
    cropped = crop_centred(raw, 0.75 * fov);
    source = &cropped;
  }
  if (at_spacing(source->geometry(), config.superres_resolution_mm)) {
    return {std::move(id), map_labels(*source, taxonomy)};
  }
  ResampleSpec spec;
  spec.target_voxel_size = {config.superres_resolution_mm, config.superres_resolution_mm,
                            config.superres_resolution_mm};
  spec.smoothing_sigma_mm = config.smoothing_sigma_mm;
  spec.interpolation = config.interpolation;
  return {std::move(id), superresolve_labels(*source, taxonomy, spec)};
}

Geometry output_grid(const PreparedTemplate& tmpl, const GeneratorConfig& config) {
  const Geometry& g = tmpl.classes.geometry();
  if (config.crop == 0) return g;
  const std::size_t n = config.crop * config.pool_factor();
  const Dims3 dims{n, n, n};
  Eigen::Matrix4d affine = g.affine();
  const Eigen::Matrix3d linear = affine.block<3, 3>(0, 0);
  const Eigen::Vector3d half = Eigen::Vector3d::Constant(0.5 * (static_cast<double>(n) - 1.0));
  affine.block<3, 1>(0, 3) = g.center_world() - linear * half;
  return Geometry(dims, affine);
}

GeneratedSample generate_sample(const PreparedTemplate& tmpl, const LabelTaxonomy& taxonomy,
                                const GeneratorConfig& config, std::uint64_t seed) {
  GenerationRecipe recipe;
  recipe.template_id = tmpl.id;
  recipe.rng_seed = seed;
  const Geometry grid = output_grid(tmpl, config);
  recipe.shape = run_stage("shape sampling", seed, [&] {
    return sample_shape_recipe(taxonomy, config.shape, stage_seed(seed, Stage::shape), grid);
  });
  recipe.contrast = run_stage("contrast sampling", seed, [&] {
    return sample_contrast(taxonomy.class_count(), stage_seed(seed, Stage::contrast),
                           config.contrast);
  });
  recipe.artifacts = run_stage("artifact sampling", seed, [&] {
    return sample_artifacts(config.artifacts, stage_seed(seed, Stage::artifacts));
  });
  return generate_from_recipe(tmpl, taxonomy, config, recipe);
}

GeneratedSample generate_from_recipe(const PreparedTemplate& tmpl, const LabelTaxonomy& taxonomy,
                                     const GeneratorConfig& config,
                                     const GenerationRecipe& recipe) {
  const std::uint64_t seed = recipe.rng_seed;
  const Geometry grid = output_grid(tmpl, config);
  MorphLog log;

  LabelVolume shaped = run_stage("morphology", seed, [&] {
    LabelVolume cur = tmpl.classes;
    for (const MorphSample& m : recipe.shape.morph_samples) {
      cur = constrained_morph(cur, m, taxonomy, &log);
    }
    return cur;
  });

  shaped = run_stage("spatial transform", seed, [&] {
    const ShapeRecipe& s = recipe.shape;
    if (s.affine.is_identity() && s.elastic.is_zero() && grid.same_grid(shaped.geometry())) {
      return std::move(shaped);
    }
    return apply_spatial_transform(shaped, s.affine, s.elastic, grid);
  });

  const std::size_t f = config.pool_factor();
  ProbVolume pv = run_stage("partial-volume pooling", seed, [&] {
    return pool_labels(shaped, taxonomy.class_count(), PoolSpec{{f, f, f}});
  });
  LabelVolume labels = argmax_labels(pv);

  IntensityVolume image = run_stage("render", seed, [&] {
    return render_image(pv, recipe.contrast, stage_seed(seed, Stage::render));
  });
  image = run_stage("bias field", seed, [&] {
    return apply_bias_field(image, recipe.artifacts, stage_seed(seed, Stage::bias));
  });
  image = run_stage("motion", seed, [&] {
    return apply_motion(image, recipe.artifacts, stage_seed(seed, Stage::motion));
  });
  image = run_stage("noise and normalization", seed, [&] {
    if (recipe.artifacts.noise_enabled) {
      return apply_noise_and_normalize(image, recipe.artifacts.noise_std,
                                       stage_seed(seed, Stage::noise));
    }
    return normalize_min_max(image);
  });

  return {std::move(image), std::move(pv), std::move(labels), recipe, std::move(log.warnings)};
}

}  // namespace forge
