/**
 * @file contrast.hpp
 * @brief Partial-volume-weighted Gaussian-mixture rendering and intensity
 *        augmentations (bias field, k-space motion, noise, normalization).
 */
#pragma once

#include <cstdint>

#include <json.hpp>

#include "forge/volume.hpp"

namespace forge {

/// Sampling bounds for tissue intensities; validate() enforces that they lie
/// within means [0,1] and stds [0.001, 0.01].
struct ContrastConfig {
  double mean_min = 0.0, mean_max = 1.0;
  double std_min = 0.001, std_max = 0.01;
  void validate() const;
};

struct ContrastSample {
  std::vector<double> means;  ///< per class, in [0,1]
  std::vector<double> stds;   ///< per class, in [0.001, 0.01]
};

/// i.i.d. uniform means and stds per class; deterministic in seed.
ContrastSample sample_contrast(std::size_t classes, std::uint64_t seed,
                               const ContrastConfig& config = {});

/// I(v) = sum_k pv_k(v) * (mean_k + std_k * z_k(v)) with z_k(v) standard
/// normal, drawn independently per voxel and class from (seed, k, v). Two
/// renders with the same seed share the noise realization.
IntensityVolume render_image(const ProbVolume& pv, const ContrastSample& contrast,
                             std::uint64_t seed);

struct BiasSettings {
  bool enabled = true;
  double coefficient_range = 0.3;   ///< log-field coefficients in [-r, r]
  double control_spacing_mm = 60.0;
};

struct MotionSettings {
  bool enabled = true;
  int num_movements = 0;
  double max_rotation_deg = 5.0;
  double max_translation_mm = 4.0;
};

struct ArtifactSample {
  BiasSettings bias;
  MotionSettings motion;
  bool noise_enabled = true;
  double noise_std = 0.05;  ///< in [0.01, 0.1]
};

struct ArtifactConfig {
  BiasSettings bias;
  bool motion_enabled = true;
  int min_movements = 0, max_movements = 2;
  double max_rotation_deg = 5.0;
  double max_translation_mm = 4.0;
  bool noise_enabled = true;
  double noise_std_min = 0.01, noise_std_max = 0.1;
  void validate() const;
};

ArtifactSample sample_artifacts(const ArtifactConfig& config, std::uint64_t seed);

/// exp of a trilinearly expanded coarse log-field, shifted to zero mean log.
IntensityVolume bias_field(const Geometry& grid, const BiasSettings& bias, std::uint64_t seed);
IntensityVolume apply_bias_field(const IntensityVolume& img, const ArtifactSample& sample,
                                 std::uint64_t seed);

/// Rigidly moved copies substituted band-wise along one k-space axis; the
/// band holding DC keeps the unmoved spectrum. Returns the magnitude.
IntensityVolume apply_motion(const IntensityVolume& img, const ArtifactSample& sample,
                             std::uint64_t seed);

/// Adds i.i.d. Normal(0, stddev); stddev must lie in [0.01, 0.1].
IntensityVolume add_gaussian_noise(const IntensityVolume& img, double stddev, std::uint64_t seed);
/// Min-max to exactly [0,1]; a constant image maps to zeros.
IntensityVolume normalize_min_max(const IntensityVolume& img);
IntensityVolume apply_noise_and_normalize(const IntensityVolume& img, double noise_std,
                                          std::uint64_t seed);

nlohmann::json to_json(const ContrastSample& c);
ContrastSample contrast_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ArtifactSample& a);
ArtifactSample artifacts_from_json(const nlohmann::json& j);

inline constexpr double kNoiseStdMin = 0.01;
inline constexpr double kNoiseStdMax = 0.1;
inline constexpr double kContrastStdMin = 0.001;
inline constexpr double kContrastStdMax = 0.01;

}  // namespace forge
