/**
 * @file nifti.hpp
 * @brief NIfTI-1 reading and writing (.nii and .nii.gz).
 *
 * Volumes are reoriented on load so that array axis i runs along +world
 * axis i (closest permutation and flips of the stored affine). Saving
 * writes the affine to both qform and sform.
 */
#pragma once

#include <filesystem>

#include "forge/volume.hpp"

namespace forge {

/// Header summary, mostly for tests and diagnostics.
struct NiftiInfo {
  int ndim = 0;
  std::array<long, 7> dim{};
  int datatype = 0;
};

LabelVolume load_label_volume(const std::filesystem::path& path);
IntensityVolume load_intensity_volume(const std::filesystem::path& path);
/// Reads a 4D file as a ProbVolume; the channel-sum invariant is enforced
/// with float32 tolerance.
ProbVolume load_prob_volume(const std::filesystem::path& path);
NiftiInfo read_nifti_info(const std::filesystem::path& path);

/// uint16 labels.
void save_volume(const LabelVolume& volume, const std::filesystem::path& path);
/// float32 intensities.
void save_volume(const IntensityVolume& volume, const std::filesystem::path& path);
/// float32, 4D with the channel as the fourth axis.
void save_volume(const ProbVolume& volume, const std::filesystem::path& path);

}  // namespace forge
