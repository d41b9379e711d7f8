#include "forge/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/nifti.hpp"
#include "forge/parallel.hpp"
#include "forge/stats.hpp"
#include "forge/version.hpp"

namespace fs = std::filesystem;

namespace forge {

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"sample_id", e.sample_id},
                       {"image_path", e.image_path},
                       {"label_path", e.label_path},
                       {"pv_path", e.pv_path},
                       {"recipe_path", e.recipe_path},
                       {"template_id", e.template_id}});
  }
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : m.errors) errors.push_back({{"sample_id", e.sample_id}, {"message", e.message}});
  return {{"tool_version", m.tool_version},
          {"config_hash", m.config_hash},
          {"entries", entries},
          {"errors", errors}};
}

// ---------------------------------------------------------------- generate

namespace {

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", i);
  return buf;
}

/// Recipe file of a complete earlier run with the same configuration.
bool sample_complete(const fs::path& out, const ManifestEntry& e, const std::string& hash) {
  for (const auto& rel : {e.image_path, e.label_path, e.pv_path, e.recipe_path}) {
    if (!fs::exists(out / rel)) return false;
  }
  try {
    std::ifstream in(out / e.recipe_path);
    const auto j = nlohmann::json::parse(in);
    return j.at("config_hash").get<std::string>() == hash;
  } catch (const std::exception&) {
    return false;
  }
}

/// Super-resolved templates, computed on first use.
class TemplateCache {
 public:
  TemplateCache(const std::vector<LabelVolume>& raw, const std::vector<std::string>& ids,
                const LabelTaxonomy& taxonomy, const GeneratorConfig& config)
      : raw_(raw), ids_(ids), taxonomy_(taxonomy), config_(config),
        flags_(raw.size()), prepared_(raw.size()) {}

  const PreparedTemplate& get(std::size_t i) {
    std::call_once(flags_[i], [&] {
      prepared_[i] = prepare_template(raw_[i], taxonomy_, config_, ids_[i]);
    });
    return prepared_[i];
  }

 private:
  const std::vector<LabelVolume>& raw_;
  const std::vector<std::string>& ids_;
  const LabelTaxonomy& taxonomy_;
  const GeneratorConfig& config_;
  std::vector<std::once_flag> flags_;
  std::vector<PreparedTemplate> prepared_;
};

}  // namespace

GenerateReport cmd_generate(const PipelineConfig& config, std::ostream* log) {
  if (auto errors = validate(config); !errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  const LabelTaxonomy taxonomy = load_taxonomy(config);
  std::vector<LabelVolume> raw;
  for (const auto& path : config.template_paths) {
    LabelVolume t = load_template(config, path);
    try {
      map_labels(t, taxonomy);
    } catch (const TaxonomyError& e) {
      throw TaxonomyError("template " + path + ": " + e.what());
    }
    raw.push_back(std::move(t));
  }
  TemplateCache cache(raw, config.template_paths, taxonomy, config.generator);

  const fs::path out = resolve_path(config, config.output_dir);
  for (const char* sub : {"images", "labels", "pv", "recipes"}) fs::create_directories(out / sub);
  const std::string hash = config_hash(config);

  const std::size_t n = config.num_samples;
  std::vector<ManifestEntry> entries(n);
  std::vector<std::optional<std::string>> failures(n);
  std::vector<char> skipped(n, 0);
  std::mutex log_mutex;

  const unsigned workers = config.workers ? static_cast<unsigned>(config.workers) : default_workers();
  parallel_for(n, workers, [&](std::size_t i) {
    const std::string id = sample_name(i);
    const std::size_t t = i % raw.size();
    ManifestEntry& e = entries[i];
    e.sample_id = id;
    e.image_path = "images/" + id + ".nii.gz";
    e.label_path = "labels/" + id + ".nii.gz";
    e.pv_path = "pv/" + id + ".nii.gz";
    e.recipe_path = "recipes/" + id + ".json";
    e.template_id = config.template_paths[t];
    if (sample_complete(out, e, hash)) {
      skipped[i] = 1;
      return;
    }
    const std::uint64_t seed = derive_seed(config.master_seed, i);
    try {
      fs::remove(out / e.recipe_path);
      const GeneratedSample s = generate_sample(cache.get(t), taxonomy, config.generator, seed);
      save_volume(s.image, out / e.image_path);
      save_volume(s.labels, out / e.label_path);
      save_volume(s.pv, out / e.pv_path);
      nlohmann::json recipe = {{"sample_id", id},
                               {"config_hash", hash},
                               {"tool_version", kToolVersion},
                               {"recipe", to_json(s.recipe)},
                               {"warnings", s.warnings}};
      write_file_atomic(out / e.recipe_path, recipe.dump(2) + "\n");
    } catch (const std::exception& ex) {
      failures[i] = ex.what();
    }
    if (log) {
      std::lock_guard lock(log_mutex);
      *log << id << (failures[i] ? " failed: " + *failures[i] : std::string(" done")) << "\n";
    }
  });

  GenerateReport report;
  report.manifest.config_hash = hash;
  report.manifest.tool_version = kToolVersion;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i]) {
      report.manifest.errors.push_back({entries[i].sample_id, *failures[i]});
      continue;
    }
    report.manifest.entries.push_back(entries[i]);
    skipped[i] ? ++report.skipped : ++report.generated;
  }
  write_file_atomic(out / "manifest.json", to_json(report.manifest).dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------- superres

void cmd_superres(const fs::path& template_path, const LabelTaxonomy& taxonomy,
                  const fs::path& out_path, const ResampleSpec& spec) {
  const LabelVolume raw = load_label_volume(template_path);
  const Vec3 vs = raw.geometry().voxel_size();
  bool at_target = true;
  for (int a = 0; a < 3; ++a) at_target = at_target && std::abs(vs[a] - spec.target_voxel_size[a]) < 1e-6;
  save_volume(at_target ? map_labels(raw, taxonomy) : superresolve_labels(raw, taxonomy, spec), out_path);
}

// ---------------------------------------------------------------- evaluate

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "accuracy") return EvalMode::accuracy;
  if (name == "consistency") return EvalMode::consistency;
  if (name == "atrophy") return EvalMode::atrophy;
  throw ConfigError("unknown evaluation mode '" + name + "' (accuracy, consistency, atrophy)");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  s = s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct CsvTable {
  std::map<std::string, std::size_t> columns;
  std::vector<std::vector<std::string>> rows;

  bool has(const std::string& c) const { return columns.count(c) != 0; }
  const std::string& cell(std::size_t r, const std::string& c) const {
    return rows[r].at(columns.at(c));
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  CsvTable t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (header) {
      for (std::size_t i = 0; i < cells.size(); ++i) t.columns[cells[i]] = i;
      header = false;
      continue;
    }
    cells.resize(std::max(cells.size(), t.columns.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

struct MeanStd {
  double mean = 0, std = 0;
  std::size_t n = 0;
};

/// Sample standard deviation (n - 1); 0 for a single value.
MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  r.n = v.size();
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

nlohmann::json to_json(const MeanStd& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"n", m.n}};
}

nlohmann::json comparison_json(const std::map<std::string, std::map<std::string, double>>& per_model,
                               double alpha) {
  // Pair scores by subject; models must cover the same subjects.
  std::map<std::string, std::vector<double>> scores;
  std::set<std::string> subjects;
  for (const auto& [model, m] : per_model)
    for (const auto& [s, v] : m) subjects.insert(s);
  for (const auto& [model, m] : per_model) {
    if (m.size() != subjects.size()) {
      throw PairingError("model '" + model + "' is missing subjects present for other models");
    }
    for (const auto& [s, v] : m) scores[model].push_back(v);
  }
  const ModelComparison cmp = bonferroni_compare(scores, alpha);
  nlohmann::json j = {{"top", cmp.top}, {"alpha", alpha}, {"models", nlohmann::json::object()}};
  for (const auto& [model, r] : cmp.results) {
    j["models"][model] = {{"statistic", r.statistic},   {"p_value", r.p_value},
                          {"n_pairs", r.n_pairs},       {"corrected_alpha", r.corrected_alpha},
                          {"significant", r.significant}, {"flagged", cmp.flagged.count(model) > 0}};
  }
  return j;
}

std::vector<std::string> row_model(const CsvTable& t) {
  std::vector<std::string> m(t.rows.size(), "model");
  if (t.has("model"))
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      if (!t.cell(r, "model").empty()) m[r] = t.cell(r, "model");
  return m;
}

void require_columns(const CsvTable& t, std::initializer_list<const char*> cols) {
  for (const char* c : cols) {
    if (!t.has(c)) throw ConfigError(std::string("manifest lacks required column '") + c + "'");
  }
}

void evaluate_overlap(const CsvTable& t, bool consistency, const fs::path& base,
                      const fs::path& out_dir, const EvaluateOptions& opt, EvaluateReport& report) {
  const std::string other = consistency ? "pair_path" : "ref_path";
  require_columns(t, {"subject_id", "pred_path"});
  require_columns(t, {other.c_str()});
  const auto models = row_model(t);
  const std::size_t n = t.rows.size();
  std::vector<std::optional<DiceReport>> results(n);
  std::vector<std::string> errors(n);
  const unsigned workers = opt.workers ? opt.workers : default_workers();
  parallel_for(n, workers, [&](std::size_t r) {
    try {
      const LabelVolume a = load_label_volume(base / t.cell(r, "pred_path"));
      const LabelVolume b = load_label_volume(base / t.cell(r, other));
      std::set<Label> classes = opt.classes;
      if (classes.empty()) {
        for (Label l : a.values()) if (l != 0) classes.insert(l);
        for (Label l : b.values()) if (l != 0) classes.insert(l);
      }
      results[r] = consistency ? consistency_dice(a, b, classes) : dice(a, b, classes);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });

  const std::string stem = consistency ? "consistency" : "dice";
  std::ostringstream csv;
  csv << "subject_id,model,class,dice,pred_voxels,ref_voxels,intersection\n";
  std::map<std::string, std::vector<double>> subject_means;
  std::map<std::string, std::map<Label, std::vector<double>>> class_scores;
  std::map<std::string, std::map<std::string, double>> per_model_subject;
  std::map<std::string, std::size_t> undefined;
  for (std::size_t r = 0; r < n; ++r) {
    const std::string& sid = t.cell(r, "subject_id");
    if (!results[r]) {
      report.failures.push_back({r + 1, sid, errors[r]});
      continue;
    }
    const DiceReport& d = *results[r];
    for (const auto& [k, v] : d.per_class) {
      const ClassCounts& c = d.voxel_counts.at(k);
      csv << sid << ',' << models[r] << ',' << k << ',' << (v ? fmt(*v, 10) : "NA") << ','
          << c.pred << ',' << c.ref << ',' << c.both << '\n';
      if (v) class_scores[models[r]][k].push_back(*v);
      else ++undefined[models[r]];
    }
    if (d.mean) {
      subject_means[models[r]].push_back(*d.mean);
      per_model_subject[models[r]][sid] = *d.mean;
    }
  }
  nlohmann::json summary = {{"mode", consistency ? "consistency" : "accuracy"},
                            {"rows", n},
                            {"models", nlohmann::json::object()}};
  for (const auto& [model, means] : subject_means) {
    nlohmann::json m = to_json(mean_std(means));
    m["undefined_class_scores"] = undefined[model];
    for (const auto& [k, v] : class_scores[model]) m["per_class"][std::to_string(k)] = to_json(mean_std(v));
    summary["models"][model] = m;
  }
  if (opt.compare_models && !per_model_subject.empty()) {
    try {
      summary["comparison"] = comparison_json(per_model_subject, opt.alpha);
    } catch (const Error& e) {
      summary["comparison_error"] = e.what();
    }
  }
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : report.failures)
    fails.push_back({{"row", f.row}, {"subject_id", f.subject_id}, {"message", f.message}});
  summary["failures"] = fails;

  const fs::path csv_path = out_dir / (stem + "_per_subject.csv");
  const fs::path json_path = out_dir / (stem + "_summary.json");
  write_file_atomic(csv_path, csv.str());
  write_file_atomic(json_path, summary.dump(2) + "\n");
  report.outputs = {csv_path, json_path};
}

bool is_baseline(const std::string& level) {
  if (level == "baseline") return true;
  try {
    std::size_t used = 0;
    const double v = std::stod(level, &used);
    return used == level.size() && v == 0.0;
  } catch (const std::exception&) {
    return false;
  }
}

/// Canonical spelling of a numeric level ("1.0" -> "1", ".3" -> "0.3").
std::string level_key(const std::string& level) {
  try {
    std::size_t used = 0;
    const double v = std::stod(level, &used);
    if (used == level.size()) return fmt(v, 10);
  } catch (const std::exception&) {
  }
  return level;
}

void evaluate_atrophy(const CsvTable& t, const fs::path& base, const fs::path& out_dir,
                      const EvaluateOptions& opt, EvaluateReport& report) {
  require_columns(t, {"subject_id", "pred_path", "ref_path", "level"});
  const auto models = row_model(t);
  const std::size_t n = t.rows.size();
  struct Volumes {
    double pred = 0, ref = 0;
  };
  std::vector<std::optional<Volumes>> vols(n);
  std::vector<std::string> errors(n);
  const unsigned workers = opt.workers ? opt.workers : default_workers();
  parallel_for(n, workers, [&](std::size_t r) {
    try {
      const LabelVolume p = load_label_volume(base / t.cell(r, "pred_path"));
      const LabelVolume q = load_label_volume(base / t.cell(r, "ref_path"));
      if (!p.geometry().same_grid(q.geometry())) {
        throw AlignmentError("prediction and reference grids differ");
      }
      vols[r] = Volumes{class_volume(p, opt.atrophy_class), class_volume(q, opt.atrophy_class)};
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });

  // (model, subject) -> baseline row
  std::map<std::pair<std::string, std::string>, std::size_t> baseline;
  for (std::size_t r = 0; r < n; ++r) {
    if (is_baseline(t.cell(r, "level"))) {
      const auto key = std::make_pair(models[r], t.cell(r, "subject_id"));
      if (baseline.count(key)) {
        report.failures.push_back({r + 1, key.second, "duplicate baseline row"});
        continue;
      }
      baseline[key] = r;
    }
  }

  std::ostringstream csv;
  csv << "model,subject_id,level,v_pred_baseline,v_pred_atrophy,v_ref_baseline,v_ref_atrophy,"
         "relative_atrophy_error\n";
  std::map<std::string, std::map<std::string, std::vector<double>>> by_level;  // model, level
  std::map<std::string, std::vector<double>> all;
  std::map<std::string, std::map<std::string, std::vector<double>>> abs_by_subject;
  std::set<std::string> levels;
  for (std::size_t r = 0; r < n; ++r) {
    const std::string& sid = t.cell(r, "subject_id");
    const std::string& level = t.cell(r, "level");
    if (!vols[r]) {
      report.failures.push_back({r + 1, sid, errors[r]});
      continue;
    }
    if (is_baseline(level)) continue;
    const auto it = baseline.find({models[r], sid});
    if (it == baseline.end()) {
      report.failures.push_back({r + 1, sid, "no baseline row for this subject"});
      continue;
    }
    if (!vols[it->second]) {
      report.failures.push_back({r + 1, sid, "baseline row failed to load"});
      continue;
    }
    const AtrophyCase c{vols[it->second]->pred, vols[r]->pred, vols[it->second]->ref, vols[r]->ref};
    double err = 0;
    try {
      err = relative_atrophy_error(c, opt.atrophy_form);
    } catch (const std::exception& e) {
      report.failures.push_back({r + 1, sid, e.what()});
      continue;
    }
    const std::string key = level_key(level);
    levels.insert(key);
    csv << models[r] << ',' << sid << ',' << key << ',' << fmt(c.v_pred_baseline, 10) << ','
        << fmt(c.v_pred_atrophy, 10) << ',' << fmt(c.v_ref_baseline, 10) << ','
        << fmt(c.v_ref_atrophy, 10) << ',' << fmt(err, 10) << '\n';
    by_level[models[r]][key].push_back(err);
    all[models[r]].push_back(err);
    abs_by_subject[models[r]][sid].push_back(std::abs(err));
  }

  // Numeric levels ascending, then any others.
  std::vector<std::string> ordered(levels.begin(), levels.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const std::string& a, const std::string& b) {
    auto num = [](const std::string& s) {
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    return num(a) < num(b);
  });

  auto cell = [](const std::vector<double>& v) {
    if (v.empty()) return std::string("NA");
    const MeanStd m = mean_std(v);
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << 100.0 * m.mean << " (" << 100.0 * m.std << ")";
    return os.str();
  };
  std::ostringstream table;
  table << "model,All";
  for (const auto& l : ordered) table << ',' << l;
  table << '\n';
  nlohmann::json summary = {{"mode", "atrophy"},
                            {"class", opt.atrophy_class},
                            {"form", opt.atrophy_form == AtrophyErrorForm::fraction_ratio
                                         ? "fraction_ratio"
                                         : "volume_ratio_product"},
                            {"levels", ordered},
                            {"models", nlohmann::json::object()}};
  for (const auto& [model, errs] : all) {
    table << model << ",\"" << cell(errs) << '"';
    nlohmann::json m = {{"All", to_json(mean_std(errs))}};
    for (const auto& l : ordered) {
      const auto& v = by_level[model][l];
      table << ",\"" << cell(v) << '"';
      m[l] = to_json(mean_std(v));
    }
    table << '\n';
    summary["models"][model] = m;
  }
  if (opt.compare_models && !abs_by_subject.empty()) {
    // Higher is better for the comparison, so score subjects by -mean |error|.
    std::map<std::string, std::map<std::string, double>> scores;
    for (const auto& [model, subjects] : abs_by_subject)
      for (const auto& [sid, v] : subjects) scores[model][sid] = -mean_std(v).mean;
    try {
      summary["comparison"] = comparison_json(scores, opt.alpha);
    } catch (const Error& e) {
      summary["comparison_error"] = e.what();
    }
  }
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : report.failures)
    fails.push_back({{"row", f.row}, {"subject_id", f.subject_id}, {"message", f.message}});
  summary["failures"] = fails;

  const fs::path csv_path = out_dir / "atrophy_per_subject.csv";
  const fs::path table_path = out_dir / "atrophy_table.csv";
  const fs::path json_path = out_dir / "atrophy_summary.json";
  write_file_atomic(csv_path, csv.str());
  write_file_atomic(table_path, table.str());
  write_file_atomic(json_path, summary.dump(2) + "\n");
  report.outputs = {csv_path, table_path, json_path};
}

}  // namespace

EvaluateReport cmd_evaluate(const fs::path& manifest_csv, EvalMode mode, const fs::path& out_dir,
                            const EvaluateOptions& options) {
  const CsvTable t = read_csv(manifest_csv);
  if (t.rows.empty()) throw ConfigError("manifest " + manifest_csv.string() + " has no rows");
  fs::create_directories(out_dir);
  const fs::path base = manifest_csv.parent_path();
  EvaluateReport report;
  report.rows = t.rows.size();
  switch (mode) {
    case EvalMode::accuracy: evaluate_overlap(t, false, base, out_dir, options, report); break;
    case EvalMode::consistency: evaluate_overlap(t, true, base, out_dir, options, report); break;
    case EvalMode::atrophy: evaluate_atrophy(t, base, out_dir, options, report); break;
  }
  return report;
}

// ---------------------------------------------------------------- validate

std::size_t cmd_validate_config(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  std::vector<std::string> errors;
  PipelineConfig config;
  {
    std::ifstream in(config_path);
    if (!in) {
      err << config_path.string() << ": cannot read file\n";
      return 1;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      err << config_path.string() << ": " << e.what() << "\n";
      return 1;
    }
    config = parse_pipeline_config(j, errors, config_path.parent_path());
  }
  if (errors.empty()) errors = validate(config);

  if (errors.empty()) {
    try {
      const LabelTaxonomy taxonomy = load_taxonomy(config);
      std::optional<Geometry> grid;
      for (const auto& path : config.template_paths) {
        try {
          const LabelVolume t = load_template(config, path);
          map_labels(t, taxonomy);
          if (!grid) {
            const double s = config.generator.superres_resolution_mm;
            grid = resampled_geometry(t.geometry(), {s, s, s});
          }
        } catch (const Error& e) {
          errors.push_back("templates: " + path + ": " + e.what());
        }
      }
      if (grid) {
        const std::uint64_t seed = derive_seed(config.master_seed, 0);
        sample_shape_recipe(taxonomy, config.generator.shape, stage_seed(seed, Stage::shape), *grid);
        sample_contrast(taxonomy.class_count(), stage_seed(seed, Stage::contrast),
                        config.generator.contrast);
        sample_artifacts(config.generator.artifacts, stage_seed(seed, Stage::artifacts));
      }
    } catch (const Error& e) {
      errors.push_back(std::string("taxonomy: ") + e.what());
    }
  }

  for (const auto& e : errors) err << config_path.string() << ": " << e << "\n";
  if (errors.empty()) {
    out << to_json(config).dump(2) << "\n";
    out << "config_hash: " << config_hash(config) << "\n";
  }
  return errors.size();
}

}  // namespace forge
