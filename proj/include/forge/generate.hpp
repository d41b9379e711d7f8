/**
 * @file generate.hpp
 * @brief End-to-end synthesis of one image / partial-volume / label triple
 *        from a label template, and its replayable recipe.
 */
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "forge/contrast.hpp"
#include "forge/resample.hpp"
#include "forge/rng.hpp"
#include "forge/shape.hpp"

namespace forge {

struct GeneratorConfig {
  double superres_resolution_mm = 0.25;
  double train_resolution_mm = 0.75;
  double smoothing_sigma_mm = 0.5;
  Interpolation interpolation = Interpolation::windowed_sinc;
  std::size_t crop = 0;  ///< output edge length in training voxels, 0 = full field
  ShapeConfig shape;
  ContrastConfig contrast;
  ArtifactConfig artifacts;

  /// Integer ratio train / superres; throws ConfigError otherwise.
  std::size_t pool_factor() const;
  void validate() const;
};

struct GenerationRecipe {
  ShapeRecipe shape;
  ContrastSample contrast;
  ArtifactSample artifacts;
  std::string template_id;
  std::uint64_t rng_seed = 0;
};

nlohmann::json to_json(const GenerationRecipe& r);
GenerationRecipe recipe_from_json(const nlohmann::json& j);

/// A template mapped to class ids at the super-resolution grid.
struct PreparedTemplate {
  std::string id;
  LabelVolume classes;
};

/// Maps and super-resolves a raw template. Templates already at the target
/// spacing are only mapped. With config.crop set, the raw template is first
/// cut to a centred region 1.5x the output field of view.
PreparedTemplate prepare_template(const LabelVolume& raw, const LabelTaxonomy& taxonomy,
                                  const GeneratorConfig& config, std::string id);

/// High-resolution grid the warped labels are sampled onto.
Geometry output_grid(const PreparedTemplate& tmpl, const GeneratorConfig& config);

struct GeneratedSample {
  IntensityVolume image;
  ProbVolume pv;
  LabelVolume labels;  ///< argmax of pv
  GenerationRecipe recipe;
  std::vector<std::string> warnings;
};

/// Draws a recipe from `seed` and renders it.
GeneratedSample generate_sample(const PreparedTemplate& tmpl, const LabelTaxonomy& taxonomy,
                                const GeneratorConfig& config, std::uint64_t seed);

/// Renders a previously drawn recipe; identical recipes give identical bytes.
GeneratedSample generate_from_recipe(const PreparedTemplate& tmpl, const LabelTaxonomy& taxonomy,
                                     const GeneratorConfig& config,
                                     const GenerationRecipe& recipe);

/// Stage-specific child seeds of a sample seed.
enum class Stage : std::uint64_t { shape = 1, contrast, render, artifacts, bias, motion, noise };
inline std::uint64_t stage_seed(std::uint64_t sample_seed, Stage s) {
  return derive_seed(sample_seed, static_cast<std::uint64_t>(s));
}

}  // namespace forge
