#include "forge/taxonomy.hpp"

#include <algorithm>
#include <fstream>

#include "forge/error.hpp"

namespace forge {

namespace {

Label resolve_class(const nlohmann::json& ref,
                    const std::vector<TissueClass>& classes) {
  if (ref.is_number_integer()) {
    const auto id = ref.get<long long>();
    if (id < 0 || id >= static_cast<long long>(classes.size())) {
      throw TaxonomyError("taxonomy: class id " + std::to_string(id) +
                          " is not declared");
    }
    return static_cast<Label>(id);
  }
  if (ref.is_string()) {
    const auto name = ref.get<std::string>();
    for (const auto& c : classes) {
      if (c.name == name) return c.id;
    }
    throw TaxonomyError("taxonomy: unknown class '" + name + "'");
  }
  throw TaxonomyError("taxonomy: class reference must be an id or a name");
}

}  // namespace

LabelTaxonomy::LabelTaxonomy(std::vector<TissueClass> classes,
                             std::vector<std::pair<Label, Label>> raw_to_class,
                             std::vector<MorphRule> morph_rules)
    : classes_(std::move(classes)), morph_rules_(std::move(morph_rules)) {
  if (classes_.empty()) throw TaxonomyError("taxonomy: no classes declared");
  std::sort(classes_.begin(), classes_.end(),
            [](const TissueClass& a, const TissueClass& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].id != i) {
      throw TaxonomyError("taxonomy: class ids must be dense 0..K-1 (missing " +
                          std::to_string(i) + ")");
    }
  }
  Label max_raw = 0;
  for (const auto& [raw, cls] : raw_to_class) max_raw = std::max(max_raw, raw);
  lut_.assign(static_cast<std::size_t>(max_raw) + 1, -1);
  for (const auto& [raw, cls] : raw_to_class) {
    if (cls >= classes_.size()) {
      throw TaxonomyError("taxonomy: raw label " + std::to_string(raw) +
                          " maps to undeclared class " + std::to_string(cls));
    }
    if (lut_[raw] >= 0 && lut_[raw] != cls) {
      throw TaxonomyError("taxonomy: raw label " + std::to_string(raw) +
                          " mapped twice");
    }
    lut_[raw] = cls;
  }
  for (const auto& rule : morph_rules_) {
    if (rule.source >= classes_.size()) {
      throw TaxonomyError("taxonomy: morph rule references undeclared class " +
                          std::to_string(rule.source));
    }
    for (Label n : rule.neighbors) {
      if (n >= classes_.size()) {
        throw TaxonomyError("taxonomy: morph rule references undeclared class " +
                            std::to_string(n));
      }
    }
  }
}

LabelTaxonomy LabelTaxonomy::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("classes")) {
    throw TaxonomyError("taxonomy: expected an object with a 'classes' array");
  }
  std::vector<TissueClass> classes;
  for (const auto& c : j.at("classes")) {
    classes.push_back({c.at("id").get<Label>(), c.at("name").get<std::string>()});
  }
  std::vector<TissueClass> sorted = classes;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<std::pair<Label, Label>> raw_to_class;
  if (j.contains("raw_to_class")) {
    for (const auto& [raw, cls] : j.at("raw_to_class").items()) {
      long long r = 0;
      try {
        r = std::stoll(raw);
      } catch (const std::exception&) {
        throw TaxonomyError("taxonomy: raw label key '" + raw + "' is not an integer");
      }
      if (r < 0 || r > 65535) {
        throw TaxonomyError("taxonomy: raw label " + raw + " out of range");
      }
      raw_to_class.emplace_back(static_cast<Label>(r), resolve_class(cls, sorted));
    }
  } else {
    for (const auto& c : sorted) raw_to_class.emplace_back(c.id, c.id);
  }

  std::vector<MorphRule> rules;
  if (j.contains("morph_rules")) {
    for (const auto& r : j.at("morph_rules")) {
      MorphRule rule;
      rule.source = resolve_class(r.at("source"), sorted);
      const auto mode = r.at("mode").get<std::string>();
      if (mode == "dilate") {
        rule.mode = MorphMode::dilate;
      } else if (mode == "erode") {
        rule.mode = MorphMode::erode;
      } else {
        throw TaxonomyError("taxonomy: morph mode must be dilate or erode, got '" +
                            mode + "'");
      }
      for (const auto& n : r.at("neighbors")) rule.neighbors.push_back(resolve_class(n, sorted));
      rules.push_back(std::move(rule));
    }
  }
  return LabelTaxonomy(std::move(classes), std::move(raw_to_class), std::move(rules));
}

LabelTaxonomy LabelTaxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open taxonomy file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw TaxonomyError("taxonomy " + path.string() + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw TaxonomyError("taxonomy " + path.string() + ": " + e.what());
  }
}

nlohmann::json LabelTaxonomy::to_json() const {
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (const auto& c : classes_) j["classes"].push_back({{"id", c.id}, {"name", c.name}});
  j["raw_to_class"] = nlohmann::json::object();
  for (std::size_t raw = 0; raw < lut_.size(); ++raw) {
    if (lut_[raw] >= 0) j["raw_to_class"][std::to_string(raw)] = lut_[raw];
  }
  j["morph_rules"] = nlohmann::json::array();
  for (const auto& r : morph_rules_) {
    nlohmann::json names = nlohmann::json::array();
    for (Label n : r.neighbors) names.push_back(classes_[n].name);
    j["morph_rules"].push_back({{"source", classes_[r.source].name},
                                {"mode", r.mode == MorphMode::dilate ? "dilate" : "erode"},
                                {"neighbors", names}});
  }
  return j;
}

LabelTaxonomy LabelTaxonomy::whole_head() {
  const std::vector<std::string> names = {
      "background",
      // brain
      "gray_matter", "white_matter", "cerebellar_gray_matter", "csf",
      "ventricles", "thalamus", "putamen", "pallidum", "caudate", "accumbens",
      "amygdala", "hippocampus",
      // extra-cerebral
      "skin_epidermis", "head_fat", "head_muscle", "salivary_glands", "air",
      "mucosa", "eyeball", "skull_bone", "skull_diploe", "dura_mater", "vessel"};
  std::vector<TissueClass> classes;
  std::vector<std::pair<Label, Label>> raw;
  for (std::size_t i = 0; i < names.size(); ++i) {
    classes.push_back({static_cast<Label>(i), names[i]});
    raw.emplace_back(static_cast<Label>(i), static_cast<Label>(i));
  }
  auto id = [&](const std::string& n) {
    return static_cast<Label>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  // Template-specific sub-labels folded into tissue classes.
  raw.emplace_back(101, id("gray_matter"));       // cortical ribbon, left
  raw.emplace_back(102, id("gray_matter"));       // cortical ribbon, right
  raw.emplace_back(103, id("white_matter"));      // cerebellar white matter
  raw.emplace_back(104, id("ventricles"));        // choroid plexus
  raw.emplace_back(105, id("csf"));               // sulcal CSF
  raw.emplace_back(106, id("head_muscle"));       // tendon

  const std::vector<Label> deep_nuclei = {id("thalamus"), id("putamen"), id("pallidum"),
                                          id("caudate"), id("accumbens")};
  std::vector<MorphRule> rules;
  {
    MorphRule wm{id("white_matter"), MorphMode::dilate,
                 {id("gray_matter"), id("ventricles")}};
    wm.neighbors.insert(wm.neighbors.end(), deep_nuclei.begin(), deep_nuclei.end());
    rules.push_back(wm);
    MorphRule wm_e = wm;
    wm_e.mode = MorphMode::erode;
    rules.push_back(wm_e);
  }
  rules.push_back({id("csf"), MorphMode::dilate, {id("gray_matter"), id("vessel")}});
  rules.push_back({id("csf"), MorphMode::erode, {id("gray_matter")}});
  rules.push_back({id("gray_matter"), MorphMode::dilate, {id("csf")}});
  rules.push_back({id("gray_matter"), MorphMode::erode, {id("csf"), id("white_matter")}});
  rules.push_back({id("ventricles"), MorphMode::dilate, {id("white_matter")}});
  rules.push_back({id("ventricles"), MorphMode::erode, {id("white_matter")}});
  for (Label n : deep_nuclei) {
    rules.push_back({n, MorphMode::dilate, {id("white_matter")}});
  }
  return LabelTaxonomy(std::move(classes), std::move(raw), std::move(rules));
}

std::vector<Label> LabelTaxonomy::raw_labels() const {
  std::vector<Label> out;
  for (std::size_t raw = 0; raw < lut_.size(); ++raw) {
    if (lut_[raw] >= 0) out.push_back(static_cast<Label>(raw));
  }
  return out;
}

std::optional<Label> LabelTaxonomy::class_id(const std::string& name) const {
  for (const auto& c : classes_) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

LabelVolume map_labels(const LabelVolume& raw, const LabelTaxonomy& taxonomy) {
  std::vector<Label> out(raw.size());
  for (std::size_t v = 0; v < raw.size(); ++v) {
    const auto cls = taxonomy.map(raw[v]);
    if (!cls) {
      throw TaxonomyError("label value " + std::to_string(raw[v]) +
                          " at voxel index " + std::to_string(v) +
                          " has no class in the taxonomy");
    }
    out[v] = *cls;
  }
  return LabelVolume(raw.geometry(), std::move(out));
}

ProbVolume one_hot_classes(const LabelVolume& classes_volume, std::size_t classes) {
  const std::size_t n = classes_volume.size();
  std::vector<double> data(n * classes, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const Label c = classes_volume[v];
    if (c >= classes) {
      throw TaxonomyError("class id " + std::to_string(c) + " at voxel index " +
                          std::to_string(v) + " exceeds class count");
    }
    data[c * n + v] = 1.0;
  }
  return ProbVolume(classes_volume.geometry(), classes, std::move(data));
}

ProbVolume one_hot(const LabelVolume& raw, const LabelTaxonomy& taxonomy) {
  return one_hot_classes(map_labels(raw, taxonomy), taxonomy.class_count());
}

LabelVolume argmax_labels(const ProbVolume& prob) {
  const std::size_t n = prob.geometry().voxel_count();
  std::vector<Label> out(n, 0);
  std::vector<double> best(prob.channel(0).begin(), prob.channel(0).end());
  for (std::size_t k = 1; k < prob.channels(); ++k) {
    const auto ch = prob.channel(k);
    for (std::size_t v = 0; v < n; ++v) {
      if (ch[v] > best[v]) {
        best[v] = ch[v];
        out[v] = static_cast<Label>(k);
      }
    }
  }
  return LabelVolume(prob.geometry(), std::move(out));
}

}  // namespace forge
