/**
 * @file phantom.hpp
 * @brief Procedural whole-head label template for demos and tests.
 */
#pragma once

#include <cstdint>

#include "forge/volume.hpp"

namespace forge {

/// Nested-ellipsoid head in raw labels of LabelTaxonomy::whole_head(),
/// scaled to fill about 90% of the field of view. `folding_seed` perturbs
/// the gyral pattern so several distinct templates can be produced.
LabelVolume make_head_phantom(const Dims3& dims, const Vec3& voxel_size,
                              std::uint64_t folding_seed = 0);

}  // namespace forge
