#include "forge/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "forge/error.hpp"
#include "forge/nifti.hpp"
#include "forge/phantom.hpp"

namespace forge {

namespace {

using nlohmann::json;

/// Typed field access that records problems instead of throwing.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) error("", "must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      error(key, "has the wrong type");
    }
  }

  /// [lo, hi] pair.
  template <class T>
  void range(const char* key, T& lo, T& hi) {
    seen_.push_back(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    const json& v = obj_.at(key);
    try {
      if (!v.is_array() || v.size() != 2) throw std::invalid_argument("");
      lo = v[0].get<T>();
      hi = v[1].get<T>();
    } catch (const std::exception&) {
      error(key, "must be a two-element [min, max] array");
    }
  }

  /// Nested object; returns null json when absent.
  const json& child(const char* key) {
    seen_.push_back(key);
    static const json empty = json::object();
    if (!obj_.is_object() || !obj_.contains(key)) return empty;
    return obj_.at(key);
  }

  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void error(const char* key, const std::string& msg) {
    const std::string p = *key ? path(key) : (path_.empty() ? "<root>" : path_);
    errors_.push_back(p + " " + msg);
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        errors_.push_back(path(k.c_str()) + " is not a recognised setting");
      }
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::vector<std::string> seen_;
};

void read_shape(const json& j, ShapeConfig& s, std::vector<std::string>& errors) {
  Reader r(j, "shape", errors);
  r.get("morph_probability", s.morph_probability);
  r.range("morph_iterations", s.min_iterations, s.max_iterations);
  std::string conn = to_string(s.connectivity);
  r.get("connectivity", conn);
  try {
    s.connectivity = parse_structuring_element(conn);
  } catch (const Error& e) {
    r.error("connectivity", e.what());
  }
  r.get("affine_enabled", s.affine_enabled);
  r.get("max_rotation_deg", s.max_rotation_deg);
  r.range("scale", s.min_scale, s.max_scale);
  r.get("max_translation_mm", s.max_translation_mm);
  r.get("max_shear", s.max_shear);
  r.get("elastic_enabled", s.elastic_enabled);
  r.get("elastic_spacing_mm", s.elastic_spacing_mm);
  r.get("elastic_max_displacement_mm", s.elastic_max_displacement_mm);
  r.finish();
}

void read_contrast(const json& j, ContrastConfig& c, std::vector<std::string>& errors) {
  Reader r(j, "contrast", errors);
  r.range("mean_range", c.mean_min, c.mean_max);
  r.range("std_range", c.std_min, c.std_max);
  r.finish();
}

void read_artifacts(const json& j, ArtifactConfig& a, std::vector<std::string>& errors) {
  Reader r(j, "artifacts", errors);
  {
    Reader b(r.child("bias"), "artifacts.bias", errors);
    b.get("enabled", a.bias.enabled);
    b.get("coefficient_range", a.bias.coefficient_range);
    b.get("control_spacing_mm", a.bias.control_spacing_mm);
    b.finish();
  }
  {
    Reader m(r.child("motion"), "artifacts.motion", errors);
    m.get("enabled", a.motion_enabled);
    m.range("num_movements", a.min_movements, a.max_movements);
    m.get("max_rotation_deg", a.max_rotation_deg);
    m.get("max_translation_mm", a.max_translation_mm);
    m.finish();
  }
  {
    Reader n(r.child("noise"), "artifacts.noise", errors);
    n.get("enabled", a.noise_enabled);
    n.range("std_range", a.noise_std_min, a.noise_std_max);
    n.finish();
  }
  r.finish();
}

template <class F>
void collect(std::vector<std::string>& errors, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    errors.emplace_back(e.what());
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(const nlohmann::json& j, std::vector<std::string>& errors,
                                     const std::filesystem::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  Reader r(j, "", errors);
  r.get("taxonomy", c.taxonomy_path);
  r.get("templates", c.template_paths);
  r.get("output_dir", c.output_dir);
  r.get("num_samples", c.num_samples);
  r.get("master_seed", c.master_seed);
  r.get("workers", c.workers);
  GeneratorConfig& g = c.generator;
  r.get("target_train_resolution_mm", g.train_resolution_mm);
  r.get("superres_resolution_mm", g.superres_resolution_mm);
  r.get("smoothing_sigma_mm", g.smoothing_sigma_mm);
  std::string interp = to_string(g.interpolation);
  r.get("interpolation", interp);
  try {
    g.interpolation = parse_interpolation(interp);
  } catch (const Error& e) {
    r.error("interpolation", e.what());
  }
  r.get("crop", g.crop);
  read_shape(r.child("shape"), g.shape, errors);
  read_contrast(r.child("contrast"), g.contrast, errors);
  read_artifacts(r.child("artifacts"), g.artifacts, errors);
  r.finish();
  return c;
}

std::vector<std::string> validate(const PipelineConfig& c) {
  std::vector<std::string> errors;
  if (c.num_samples < 1) errors.emplace_back("num_samples must be >= 1");
  if (c.template_paths.empty()) errors.emplace_back("templates must list at least one template");
  const GeneratorConfig& g = c.generator;
  if (!(g.train_resolution_mm > 0.0)) errors.emplace_back("target_train_resolution_mm must be positive");
  if (!(g.superres_resolution_mm > 0.0)) errors.emplace_back("superres_resolution_mm must be positive");
  if (g.train_resolution_mm > 0.0 && g.superres_resolution_mm > 0.0) {
    if (g.superres_resolution_mm > g.train_resolution_mm) {
      errors.emplace_back("superres_resolution_mm must not exceed target_train_resolution_mm");
    } else {
      collect(errors, [&] { g.pool_factor(); });
    }
  }
  if (!(g.smoothing_sigma_mm >= 0.0)) errors.emplace_back("smoothing_sigma_mm must be >= 0");
  collect(errors, [&] { g.shape.validate(); });
  collect(errors, [&] { g.contrast.validate(); });
  collect(errors, [&] { g.artifacts.validate(); });
  return errors;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  std::vector<std::string> errors;
  PipelineConfig c = parse_pipeline_config(j, errors, path.parent_path());
  if (errors.empty()) errors = validate(c);
  if (!errors.empty()) {
    std::string msg = path.string() + ":";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  const GeneratorConfig& g = c.generator;
  const ShapeConfig& s = g.shape;
  const ArtifactConfig& a = g.artifacts;
  return {
      {"taxonomy", c.taxonomy_path},
      {"templates", c.template_paths},
      {"output_dir", c.output_dir},
      {"num_samples", c.num_samples},
      {"master_seed", c.master_seed},
      {"workers", c.workers},
      {"target_train_resolution_mm", g.train_resolution_mm},
      {"superres_resolution_mm", g.superres_resolution_mm},
      {"smoothing_sigma_mm", g.smoothing_sigma_mm},
      {"interpolation", to_string(g.interpolation)},
      {"crop", g.crop},
      {"shape",
       {{"morph_probability", s.morph_probability},
        {"morph_iterations", {s.min_iterations, s.max_iterations}},
        {"connectivity", to_string(s.connectivity)},
        {"affine_enabled", s.affine_enabled},
        {"max_rotation_deg", s.max_rotation_deg},
        {"scale", {s.min_scale, s.max_scale}},
        {"max_translation_mm", s.max_translation_mm},
        {"max_shear", s.max_shear},
        {"elastic_enabled", s.elastic_enabled},
        {"elastic_spacing_mm", s.elastic_spacing_mm},
        {"elastic_max_displacement_mm", s.elastic_max_displacement_mm}}},
      {"contrast",
       {{"mean_range", {g.contrast.mean_min, g.contrast.mean_max}},
        {"std_range", {g.contrast.std_min, g.contrast.std_max}}}},
      {"artifacts",
       {{"bias",
         {{"enabled", a.bias.enabled},
          {"coefficient_range", a.bias.coefficient_range},
          {"control_spacing_mm", a.bias.control_spacing_mm}}},
        {"motion",
         {{"enabled", a.motion_enabled},
          {"num_movements", {a.min_movements, a.max_movements}},
          {"max_rotation_deg", a.max_rotation_deg},
          {"max_translation_mm", a.max_translation_mm}}},
        {"noise",
         {{"enabled", a.noise_enabled}, {"std_range", {a.noise_std_min, a.noise_std_max}}}}}},
  };
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

std::string config_hash(const PipelineConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("workers");
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

std::filesystem::path resolve_path(const PipelineConfig& c, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || c.base_dir.empty()) return p;
  return c.base_dir / p;
}

LabelTaxonomy load_taxonomy(const PipelineConfig& c) {
  if (c.taxonomy_path == kBuiltinTaxonomy) return LabelTaxonomy::whole_head();
  return LabelTaxonomy::load(resolve_path(c, c.taxonomy_path));
}

LabelVolume load_template(const PipelineConfig& c, const std::string& path) {
  const std::string prefix = kBuiltinPhantom;
  if (path.rfind(prefix, 0) == 0) {
    std::uint64_t seed = 0;
    if (path.size() > prefix.size()) {
      if (path[prefix.size()] != ':') throw ConfigError("unknown built-in template " + path);
      try {
        seed = std::stoull(path.substr(prefix.size() + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad phantom seed in " + path);
      }
    }
    return make_head_phantom({96, 96, 96}, {0.5, 0.5, 0.5}, seed);
  }
  return load_label_volume(resolve_path(c, path));
}

}  // namespace forge
