/**
 * @file resample.hpp
 * @brief Label super-resolution (one-hot, windowed-sinc upsampling, Gaussian
 *        smoothing, argmax) and partial-volume average pooling.
 */
#pragma once

#include "forge/taxonomy.hpp"
#include "forge/volume.hpp"

namespace forge {

enum class Interpolation { windowed_sinc, linear, nearest };

Interpolation parse_interpolation(const std::string& name);
const char* to_string(Interpolation interp);

struct ResampleSpec {
  Vec3 target_voxel_size{0.25, 0.25, 0.25};
  double smoothing_sigma_mm = 0.5;  ///< Gaussian sigma, not FWHM
  Interpolation interpolation = Interpolation::windowed_sinc;

  /// Throws ParameterError on non-positive sizes or negative sigma.
  void validate() const;
};

struct PoolSpec {
  Dims3 factor{3, 3, 3};
};

/// Lanczos window radius, in source samples.
inline constexpr int kLanczosRadius = 4;

/// Lanczos-windowed sinc, sinc(x) * sinc(x / a) for |x| < a.
double lanczos(double x, int a = kLanczosRadius);

/// Grid covering the same field of view at `voxel_size`; voxel edges of the
/// first and last voxel coincide with the source grid's.
Geometry resampled_geometry(const Geometry& source, const Vec3& voxel_size);

/// Interpolates a scalar grid onto resampled_geometry(spec.target_voxel_size).
/// Taps beyond the grid are clamped to the edge sample; the output is not
/// clamped.
IntensityVolume resample_channel(const IntensityVolume& channel, const ResampleSpec& spec);

/// Separable Gaussian with per-axis sigma = sigma_mm / voxel_size and
/// half-sample reflective borders. sigma_mm == 0 returns the input.
IntensityVolume gaussian_smooth(const IntensityVolume& channel, double sigma_mm);

/// Normalized 1D Gaussian taps, radius ceil(4 sigma).
std::vector<float> gaussian_kernel(double sigma_voxels);

/// Upsamples a raw-label template: one-hot, per-channel interpolation, clamp
/// to [0,1], Gaussian smoothing, argmax (ties to the lowest class id; a voxel
/// with every channel at zero becomes background). Output holds class ids.
/// Throws PreconditionError when the target is coarser than the source on
/// any axis.
LabelVolume superresolve_labels(const LabelVolume& raw, const LabelTaxonomy& taxonomy,
                                const ResampleSpec& spec);

/// Block-average pooling. Axes not divisible by the factor are padded on the
/// high side with background (channel 0 = 1).
ProbVolume pool_partial_volume(const ProbVolume& prob, const PoolSpec& spec);

/// pool_partial_volume(one_hot_classes(labels, classes), spec) without
/// materialising the one-hot volume.
ProbVolume pool_labels(const LabelVolume& class_labels, std::size_t classes,
                       const PoolSpec& spec);

/// Output grid of pool_partial_volume.
Geometry pooled_geometry(const Geometry& source, const Dims3& factor);

}  // namespace forge
