/**
 * @file commands.hpp
 * @brief Library entry points behind the `forge` subcommands.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/config.hpp"
#include "forge/eval.hpp"

namespace forge {

struct ManifestEntry {
  std::string sample_id;
  std::string image_path;  ///< relative to the output directory
  std::string label_path;
  std::string pv_path;
  std::string recipe_path;
  std::string template_id;
};

struct SampleFailure {
  std::string sample_id;
  std::string message;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;  ///< sorted by sample_id
  std::vector<SampleFailure> errors;
  std::string config_hash;
  std::string tool_version;
};

nlohmann::json to_json(const DatasetManifest& m);

struct GenerateReport {
  DatasetManifest manifest;
  std::size_t generated = 0;
  std::size_t skipped = 0;  ///< already complete from a previous run
};

/// Sample i uses seed derive_seed(master_seed, i) and template i mod T.
/// Writes out_dir/{images,labels,pv,recipes}/sample_%05d.* and manifest.json;
/// complete samples with a matching config hash are kept. Throws before any
/// generation when templates or taxonomy are unusable.
GenerateReport cmd_generate(const PipelineConfig& config, std::ostream* log = nullptr);

/// Super-resolves one raw template to class ids at `spec` and writes it. A
/// template already at the target spacing is only mapped to class ids.
void cmd_superres(const std::filesystem::path& template_path, const LabelTaxonomy& taxonomy,
                  const std::filesystem::path& out_path, const ResampleSpec& spec);

enum class EvalMode { accuracy, consistency, atrophy };
EvalMode parse_eval_mode(const std::string& name);

struct EvaluateOptions {
  /// Classes scored; empty means every non-background class present.
  std::set<Label> classes;
  Label atrophy_class = 1;
  AtrophyErrorForm atrophy_form = AtrophyErrorForm::fraction_ratio;
  bool compare_models = false;
  double alpha = 0.01;
  unsigned workers = 0;
};

struct RowFailure {
  std::size_t row = 0;  ///< 1-based data row
  std::string subject_id;
  std::string message;
};

struct EvaluateReport {
  std::size_t rows = 0;
  std::vector<RowFailure> failures;
  std::vector<std::filesystem::path> outputs;
};

/// Reads a CSV manifest with a header naming subject_id, pred_path and
/// ref_path (plus pair_path for consistency, level for atrophy, optional
/// model). Throws ConfigError when the manifest has no rows or misses a
/// required column.
EvaluateReport cmd_evaluate(const std::filesystem::path& manifest_csv, EvalMode mode,
                            const std::filesystem::path& out_dir,
                            const EvaluateOptions& options = {});

/// Validates the config file, cross-checks templates against the taxonomy
/// and dry-runs one recipe draw. Prints the normalized config and its hash to
/// `out`, violations to `err`. Returns the number of violations.
std::size_t cmd_validate_config(const std::filesystem::path& config_path, std::ostream& out,
                                std::ostream& err);

/// Atomic text write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace forge
