/**
 * @file eval.hpp
 * @brief Overlap and volume metrics for segmentation evaluation.
 */
#pragma once

#include <map>
#include <optional>
#include <set>

#include "forge/volume.hpp"

namespace forge {

struct ClassCounts {
  std::size_t pred = 0;  ///< |A|
  std::size_t ref = 0;   ///< |B|
  std::size_t both = 0;  ///< |A n B|
};

struct DiceReport {
  /// Dice per requested class; nullopt when the class is absent from both.
  std::map<Label, std::optional<double>> per_class;
  /// Mean over defined classes; nullopt when none is defined.
  std::optional<double> mean;
  std::map<Label, ClassCounts> voxel_counts;
};

/// Exact per-class Dice 2|A n B| / (|A| + |B|). Throws AlignmentError when the
/// grids differ (dims, or voxel size / affine beyond 1e-4 mm).
DiceReport dice(const LabelVolume& pred, const LabelVolume& ref, const std::set<Label>& classes);

/// Dice between two co-registered predictions of the same subject.
DiceReport consistency_dice(const LabelVolume& pred_a, const LabelVolume& pred_b,
                            const std::set<Label>& classes);

/// Voxel count of `class_id` times voxel volume, in mm^3.
double class_volume(const LabelVolume& labels, Label class_id);

struct AtrophyCase {
  double v_pred_baseline = 0, v_pred_atrophy = 0;
  double v_ref_baseline = 0, v_ref_atrophy = 0;
};

enum class AtrophyErrorForm {
  /// 1 - A_pred / A_ref with A = 1 - V_atrophy / V_baseline. Positive values
  /// mean the model underestimates atrophy.
  fraction_ratio,
  /// 1 - (Vpred_atr / Vpred_base) * (Vref_base / Vref_atr).
  volume_ratio_product,
};

/// Relative atrophy error. Throws PreconditionError on non-positive volumes
/// and DegenerateDataError when the reference shows no atrophy (fraction form).
double relative_atrophy_error(const AtrophyCase& c,
                              AtrophyErrorForm form = AtrophyErrorForm::fraction_ratio);

}  // namespace forge
