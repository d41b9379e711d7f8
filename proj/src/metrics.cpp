#include "forge/eval.hpp"

#include <cmath>

#include "forge/error.hpp"

namespace forge {

DiceReport dice(const LabelVolume& pred, const LabelVolume& ref, const std::set<Label>& classes) {
  if (!pred.geometry().same_grid(ref.geometry())) {
    throw AlignmentError("dice: prediction and reference grids differ");
  }
  DiceReport report;
  if (classes.empty()) return report;
  const Label top = *classes.rbegin();
  std::vector<ClassCounts> counts(static_cast<std::size_t>(top) + 1);
  const auto p = pred.values();
  const auto r = ref.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Label a = p[i], b = r[i];
    if (a <= top) ++counts[a].pred;
    if (b <= top) ++counts[b].ref;
    if (a == b && a <= top) ++counts[a].both;
  }
  double sum = 0.0;
  std::size_t defined = 0;
  for (Label k : classes) {
    const ClassCounts& c = counts[k];
    report.voxel_counts[k] = c;
    if (c.pred + c.ref == 0) {
      report.per_class[k] = std::nullopt;
      continue;
    }
    const double d = 2.0 * static_cast<double>(c.both) / static_cast<double>(c.pred + c.ref);
    report.per_class[k] = d;
    sum += d;
    ++defined;
  }
  if (defined > 0) report.mean = sum / static_cast<double>(defined);
  return report;
}

DiceReport consistency_dice(const LabelVolume& pred_a, const LabelVolume& pred_b,
                            const std::set<Label>& classes) {
  return dice(pred_a, pred_b, classes);
}

double class_volume(const LabelVolume& labels, Label class_id) {
  std::size_t n = 0;
  for (Label l : labels.values()) n += (l == class_id);
  return static_cast<double>(n) * labels.geometry().voxel_volume();
}

double relative_atrophy_error(const AtrophyCase& c, AtrophyErrorForm form) {
  if (!(c.v_pred_baseline > 0) || !(c.v_pred_atrophy > 0) || !(c.v_ref_baseline > 0) ||
      !(c.v_ref_atrophy > 0)) {
    throw PreconditionError("relative atrophy error needs strictly positive volumes");
  }
  if (form == AtrophyErrorForm::volume_ratio_product) {
    return 1.0 - (c.v_pred_atrophy / c.v_pred_baseline) * (c.v_ref_baseline / c.v_ref_atrophy);
  }
  const double a_pred = 1.0 - c.v_pred_atrophy / c.v_pred_baseline;
  const double a_ref = 1.0 - c.v_ref_atrophy / c.v_ref_baseline;
  if (a_ref == 0.0) {
    throw DegenerateDataError("reference shows no atrophy; relative error undefined");
  }
  return 1.0 - a_pred / a_ref;
}

}  // namespace forge
