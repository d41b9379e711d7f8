#include <algorithm>
#include <array>
#include <cmath>

#include "forge/error.hpp"
#include "forge/rng.hpp"
#include "forge/shape.hpp"

namespace forge {

namespace {

struct Offset {
  int dx, dy, dz;
};

std::vector<Offset> neighborhood(StructuringElement se) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int order = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (order == 0) continue;
        if (se == StructuringElement::face6 && order > 1) continue;
        if (se == StructuringElement::edge18 && order > 2) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

template <typename Visit>
void for_each_neighbor(const Dims3& d, std::size_t x, std::size_t y, std::size_t z,
                       const std::vector<Offset>& offsets, Visit&& visit) {
  for (const auto& o : offsets) {
    const long nx = static_cast<long>(x) + o.dx;
    const long ny = static_cast<long>(y) + o.dy;
    const long nz = static_cast<long>(z) + o.dz;
    if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long>(d[0]) ||
        ny >= static_cast<long>(d[1]) || nz >= static_cast<long>(d[2])) {
      continue;
    }
    visit(static_cast<std::size_t>(nx) + d[0] * (static_cast<std::size_t>(ny) +
                                                   d[1] * static_cast<std::size_t>(nz)));
  }
}

}  // namespace

StructuringElement parse_structuring_element(const std::string& name) {
  if (name == "face6" || name == "6") return StructuringElement::face6;
  if (name == "edge18" || name == "18") return StructuringElement::edge18;
  if (name == "full26" || name == "26") return StructuringElement::full26;
  throw ConfigError("unknown connectivity '" + name + "' (expected face6, edge18 or full26)");
}

const char* to_string(StructuringElement se) {
  switch (se) {
    case StructuringElement::face6: return "face6";
    case StructuringElement::edge18: return "edge18";
    case StructuringElement::full26: return "full26";
  }
  return "face6";
}

void ShapeConfig::validate() const {
  if (!(morph_probability >= 0.0 && morph_probability <= 1.0)) {
    throw ConfigError("shape.morph_probability must lie in [0, 1]");
  }
  if (min_iterations < 1 || max_iterations > 4 || min_iterations > max_iterations) {
    throw ConfigError("shape.morph_iterations must be a sub-range of [1, 4]");
  }
  if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0)) {
    throw ConfigError("shape.max_rotation_deg must lie in [0, 180]");
  }
  if (!(min_scale > 0.0) || min_scale > max_scale) {
    throw ConfigError("shape.scale range must be positive and ordered");
  }
  if (!(max_translation_mm >= 0.0)) throw ConfigError("shape.max_translation_mm must be >= 0");
  if (!(max_shear >= 0.0 && max_shear < 1.0)) throw ConfigError("shape.max_shear must lie in [0, 1)");
  if (!(elastic_spacing_mm > 0.0)) throw ConfigError("shape.elastic_spacing_mm must be positive");
  if (!(elastic_max_displacement_mm >= 0.0) ||
      elastic_max_displacement_mm >= 0.5 * elastic_spacing_mm) {
    throw ConfigError(
        "shape.elastic_max_displacement_mm must be non-negative and below half the "
        "control spacing");
  }
}

ShapeRecipe sample_shape_recipe(const LabelTaxonomy& taxonomy, const ShapeConfig& config,
                                std::uint64_t seed, const Geometry& grid) {
  config.validate();
  if (taxonomy.morph_rules().empty() && config.morph_probability > 0.0) {
    throw ConfigError("shape: morph_probability > 0 but the taxonomy declares no morph_rules");
  }
  ShapeRecipe recipe;
  recipe.rng_seed = seed;
  Rng rng(seed);
  for (std::size_t r = 0; r < taxonomy.morph_rules().size(); ++r) {
    // Both draws happen for every rule so that later parameters do not depend
    // on which rules fired.
    const bool active = rng.bernoulli(config.morph_probability);
    const int iterations =
        static_cast<int>(rng.uniform_int(config.min_iterations, config.max_iterations));
    if (active) recipe.morph_samples.push_back({r, iterations, config.connectivity});
  }
  if (config.affine_enabled) {
    auto& a = recipe.affine;
    for (int i = 0; i < 3; ++i) a.rotation_deg[i] = rng.uniform(-config.max_rotation_deg, config.max_rotation_deg);
    for (int i = 0; i < 3; ++i) a.scale[i] = rng.uniform(config.min_scale, config.max_scale);
    for (int i = 0; i < 3; ++i) a.translation_mm[i] = rng.uniform(-config.max_translation_mm, config.max_translation_mm);
    for (int i = 0; i < 3; ++i) a.shear[i] = rng.uniform(-config.max_shear, config.max_shear);
  }
  auto& e = recipe.elastic;
  e.control_grid_spacing_mm = config.elastic_spacing_mm;
  e.max_displacement_mm = config.elastic_enabled ? config.elastic_max_displacement_mm : 0.0;
  e.control_dims = control_grid_dims(grid, config.elastic_spacing_mm);
  const std::size_t nodes = e.control_dims[0] * e.control_dims[1] * e.control_dims[2];
  e.displacement.assign(nodes, Vec3{0, 0, 0});
  if (config.elastic_enabled && e.max_displacement_mm > 0.0) {
    const double m = e.max_displacement_mm;
    for (auto& v : e.displacement) {
      for (auto& c : v) c = rng.uniform(-m, m);
      const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      if (norm > m) {
        for (auto& c : v) c *= m / norm;
      }
    }
  }
  return recipe;
}

LabelVolume constrained_morph(const LabelVolume& labels, const MorphSample& sample,
                              const LabelTaxonomy& taxonomy, MorphLog* log) {
  const auto& rules = taxonomy.morph_rules();
  if (sample.rule_index >= rules.size()) {
    throw ParameterError("constrained_morph: rule index " + std::to_string(sample.rule_index) +
                         " out of range");
  }
  if (sample.iterations < 1 || sample.iterations > 4) {
    throw ParameterError("constrained_morph: iterations must lie in [1, 4]");
  }
  const MorphRule& rule = rules[sample.rule_index];
  if (rule.neighbors.empty()) return labels;

  const auto values = labels.values();
  const bool source_present =
      std::find(values.begin(), values.end(), rule.source) != values.end();
  if (!source_present) {
    if (log) {
      log->warnings.push_back("morph rule " + std::to_string(sample.rule_index) + " (" +
                              taxonomy.class_name(rule.source) +
                              "): source class absent from volume, skipped");
    }
    return labels;
  }

  std::vector<bool> permitted(taxonomy.class_count(), false);
  for (Label n : rule.neighbors) {
    if (n != rule.source) permitted[n] = true;
  }
  const auto offsets = neighborhood(sample.structuring_element);
  const Dims3& d = labels.geometry().dims();
  std::vector<Label> cur(values.begin(), values.end());
  std::vector<Label> next;
  std::vector<unsigned> counts(taxonomy.class_count(), 0);

  for (int it = 0; it < sample.iterations; ++it) {
    next = cur;
    for (std::size_t z = 0; z < d[2]; ++z) {
      for (std::size_t y = 0; y < d[1]; ++y) {
        for (std::size_t x = 0; x < d[0]; ++x) {
          const std::size_t v = x + d[0] * (y + d[1] * z);
          const Label c = cur[v];
          if (rule.mode == MorphMode::dilate) {
            if (c >= permitted.size() || !permitted[c]) continue;
            bool touches = false;
            for_each_neighbor(d, x, y, z, offsets,
                              [&](std::size_t u) { touches = touches || cur[u] == rule.source; });
            if (touches) next[v] = rule.source;
          } else {
            if (c != rule.source) continue;
            bool any = false;
            for_each_neighbor(d, x, y, z, offsets, [&](std::size_t u) {
              const Label nc = cur[u];
              if (nc < permitted.size() && permitted[nc]) {
                ++counts[nc];
                any = true;
              }
            });
            if (!any) continue;
            Label target = 0;
            unsigned best = 0;
            for (Label n = 0; n < counts.size(); ++n) {
              if (counts[n] > best) {
                best = counts[n];
                target = n;
              }
            }
            for (Label n : rule.neighbors) counts[n] = 0;
            next[v] = target;
          }
        }
      }
    }
    cur.swap(next);
  }
  return LabelVolume(labels.geometry(), std::move(cur));
}

nlohmann::json to_json(const ShapeRecipe& recipe) {
  nlohmann::json j;
  j["rng_seed"] = recipe.rng_seed;
  j["morph_samples"] = nlohmann::json::array();
  for (const auto& m : recipe.morph_samples) {
    j["morph_samples"].push_back({{"rule_index", m.rule_index},
                                  {"iterations", m.iterations},
                                  {"structuring_element", to_string(m.structuring_element)}});
  }
  const auto& a = recipe.affine;
  j["affine"] = {{"rotation_deg", a.rotation_deg},
                 {"scale", a.scale},
                 {"translation_mm", a.translation_mm},
                 {"shear", a.shear}};
  const auto& e = recipe.elastic;
  j["elastic"] = {{"control_grid_spacing_mm", e.control_grid_spacing_mm},
                  {"max_displacement_mm", e.max_displacement_mm},
                  {"control_dims", e.control_dims},
                  {"displacement_mm", e.displacement}};
  return j;
}

ShapeRecipe shape_recipe_from_json(const nlohmann::json& j) {
  ShapeRecipe r;
  r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& m : j.at("morph_samples")) {
    r.morph_samples.push_back(
        {m.at("rule_index").get<std::size_t>(), m.at("iterations").get<int>(),
         parse_structuring_element(m.at("structuring_element").get<std::string>())});
  }
  const auto& a = j.at("affine");
  r.affine.rotation_deg = a.at("rotation_deg").get<Vec3>();
  r.affine.scale = a.at("scale").get<Vec3>();
  r.affine.translation_mm = a.at("translation_mm").get<Vec3>();
  r.affine.shear = a.at("shear").get<Vec3>();
  const auto& e = j.at("elastic");
  r.elastic.control_grid_spacing_mm = e.at("control_grid_spacing_mm").get<double>();
  r.elastic.max_displacement_mm = e.at("max_displacement_mm").get<double>();
  r.elastic.control_dims = e.at("control_dims").get<Dims3>();
  r.elastic.displacement = e.at("displacement_mm").get<std::vector<Vec3>>();
  return r;
}

}  // namespace forge
