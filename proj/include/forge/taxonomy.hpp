/**
 * @file taxonomy.hpp
 * @brief Raw-label to tissue-class mapping, neighbour rules for constrained
 *        morphology, and the one-hot / argmax conversions built on them.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/volume.hpp"

namespace forge {

enum class MorphMode { dilate, erode };

struct TissueClass {
  Label id = 0;
  std::string name;
};

struct MorphRule {
  Label source = 0;
  MorphMode mode = MorphMode::dilate;
  std::vector<Label> neighbors;  ///< classes the source may grow into / yield to
};

/// Class ids are dense 0..K-1 with 0 = background.
class LabelTaxonomy {
 public:
  LabelTaxonomy() = default;
  /// Validates density of ids, mapping targets and rule references.
  LabelTaxonomy(std::vector<TissueClass> classes,
                std::vector<std::pair<Label, Label>> raw_to_class,
                std::vector<MorphRule> morph_rules);

  static LabelTaxonomy from_json(const nlohmann::json& j);
  static LabelTaxonomy load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// 24-class whole-head taxonomy: background, 12 brain and 11 extra-cerebral
  /// tissues, with the white-matter / CSF / gray-matter neighbour rules.
  static LabelTaxonomy whole_head();

  std::size_t class_count() const { return classes_.size(); }
  const std::vector<TissueClass>& classes() const { return classes_; }
  const std::vector<MorphRule>& morph_rules() const { return morph_rules_; }

  std::optional<Label> map(Label raw) const {
    if (raw < lut_.size() && lut_[raw] >= 0) return static_cast<Label>(lut_[raw]);
    return std::nullopt;
  }
  /// Raw labels with a registered mapping, ascending.
  std::vector<Label> raw_labels() const;
  std::optional<Label> class_id(const std::string& name) const;
  const std::string& class_name(Label id) const { return classes_.at(id).name; }

 private:
  std::vector<TissueClass> classes_;
  std::vector<int> lut_;  // raw -> class, -1 when unmapped
  std::vector<MorphRule> morph_rules_;
};

/// Maps raw template labels to class ids. Throws TaxonomyError naming the
/// first unmapped value and its voxel index.
LabelVolume map_labels(const LabelVolume& raw, const LabelTaxonomy& taxonomy);

/// One channel per class; channel k is 1 where the mapped label equals k.
ProbVolume one_hot(const LabelVolume& raw, const LabelTaxonomy& taxonomy);

/// One-hot of a volume that already holds class ids in [0, classes).
ProbVolume one_hot_classes(const LabelVolume& classes_volume, std::size_t classes);

/// Per-voxel highest channel; ties resolve to the lowest class id.
LabelVolume argmax_labels(const ProbVolume& prob);

}  // namespace forge
