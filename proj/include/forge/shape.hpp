/**
 * @file shape.hpp
 * @brief Shape-domain randomization on high-resolution label volumes:
 *        neighbour-constrained erosion/dilation and affine + elastic warps.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/taxonomy.hpp"
#include "forge/volume.hpp"

namespace forge {

enum class StructuringElement { face6, edge18, full26 };

StructuringElement parse_structuring_element(const std::string& name);
const char* to_string(StructuringElement se);

struct MorphSample {
  std::size_t rule_index = 0;
  int iterations = 1;  ///< [1, 4]; one iteration moves the surface one voxel
  StructuringElement structuring_element = StructuringElement::face6;
};

struct AffineSample {
  Vec3 rotation_deg{0, 0, 0};
  Vec3 scale{1, 1, 1};
  Vec3 translation_mm{0, 0, 0};
  Vec3 shear{0, 0, 0};

  /// Linear part: R_z R_y R_x * Shear * Scale.
  Eigen::Matrix3d linear() const;
  bool is_identity() const;
};

struct ElasticSample {
  double control_grid_spacing_mm = 20.0;
  double max_displacement_mm = 0.0;
  Dims3 control_dims{0, 0, 0};
  /// Control displacements in mm, x-fastest over control_dims.
  std::vector<Vec3> displacement;

  bool is_zero() const;
};

struct ShapeRecipe {
  std::vector<MorphSample> morph_samples;
  AffineSample affine;
  ElasticSample elastic;
  std::uint64_t rng_seed = 0;
};

struct ShapeConfig {
  double morph_probability = 0.3;  ///< per-rule activation probability
  int min_iterations = 1;
  int max_iterations = 4;
  StructuringElement connectivity = StructuringElement::face6;

  bool affine_enabled = true;
  double max_rotation_deg = 15.0;
  double min_scale = 0.85;
  double max_scale = 1.15;
  double max_translation_mm = 10.0;
  double max_shear = 0.05;

  bool elastic_enabled = true;
  double elastic_spacing_mm = 20.0;
  double elastic_max_displacement_mm = 8.0;

  /// Throws ConfigError describing the first violated range.
  void validate() const;
};

/// Draws a full shape recipe for the output grid `grid`. Deterministic in
/// `seed`. Throws ConfigError if rules are requested but none exist.
ShapeRecipe sample_shape_recipe(const LabelTaxonomy& taxonomy, const ShapeConfig& config,
                                std::uint64_t seed, const Geometry& grid);

/// Warnings collected while applying morphology rules.
struct MorphLog {
  std::vector<std::string> warnings;
};

/// Applies one morphology rule to a class-id volume. Dilation converts
/// permitted-neighbour voxels touching the source class; erosion hands
/// boundary source voxels to the most frequent adjacent permitted class
/// (ties to the lowest id). Iterations are applied synchronously.
LabelVolume constrained_morph(const LabelVolume& labels, const MorphSample& sample,
                              const LabelTaxonomy& taxonomy, MorphLog* log = nullptr);

/// Dense displacement, one vector (mm) per voxel of `grid`.
struct DisplacementField {
  Dims3 dims{};
  std::vector<Vec3> vectors;
};

/// Number of control nodes per axis needed to cover `grid` at `spacing_mm`.
Dims3 control_grid_dims(const Geometry& grid, double spacing_mm);

/// Trilinear expansion of the control field onto `grid`. Control node j
/// sits at voxel index j * spacing / voxel_size.
DisplacementField expand_displacement(const ElasticSample& elastic, const Geometry& grid);

/// Backward warp into `output_grid`: source = A^-1 (y - c - t) + c + d(y),
/// with c the output grid centre. Labels use nearest neighbour; samples
/// outside the input are background. Throws ParameterError when
/// |det A| < 1e-6.
LabelVolume apply_spatial_transform(const LabelVolume& labels, const AffineSample& affine,
                                    const ElasticSample& elastic, const Geometry& output_grid);
LabelVolume apply_spatial_transform(const LabelVolume& labels, const AffineSample& affine,
                                    const ElasticSample& elastic);
/// Trilinear per channel, out-of-field corners count as background, then
/// per-voxel renormalization.
ProbVolume apply_spatial_transform(const ProbVolume& prob, const AffineSample& affine,
                                   const ElasticSample& elastic, const Geometry& output_grid);
ProbVolume apply_spatial_transform(const ProbVolume& prob, const AffineSample& affine,
                                   const ElasticSample& elastic);

nlohmann::json to_json(const ShapeRecipe& recipe);
ShapeRecipe shape_recipe_from_json(const nlohmann::json& j);

}  // namespace forge
