/**
 * @file config.hpp
 * @brief Pipeline configuration: JSON schema, validation and content hash.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/generate.hpp"
#include "forge/taxonomy.hpp"

namespace forge {

/// Built-in sources usable in place of file paths.
inline constexpr const char* kBuiltinTaxonomy = "builtin:whole_head";
inline constexpr const char* kBuiltinPhantom = "builtin:phantom";  ///< optional ":<seed>"

struct PipelineConfig {
  std::string taxonomy_path = kBuiltinTaxonomy;
  std::vector<std::string> template_paths;
  std::string output_dir = "synth_out";
  std::size_t num_samples = 1;
  std::uint64_t master_seed = 0;
  std::size_t workers = 0;  ///< 0 = all hardware threads
  GeneratorConfig generator;
  /// Directory relative paths are resolved against (the config file's).
  std::filesystem::path base_dir;
};

/// Reads `j` into a config, appending one message per violation (prefixed
/// with its key path) to `errors`. Missing keys keep their defaults; unknown
/// keys are violations.
PipelineConfig parse_pipeline_config(const nlohmann::json& j, std::vector<std::string>& errors,
                                     const std::filesystem::path& base_dir = {});

/// Parses a JSON file (comments allowed). Throws ConfigError listing every
/// violation, IoError when unreadable.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Range and consistency checks; one message per violation.
std::vector<std::string> validate(const PipelineConfig& config);

/// Every setting with defaults filled in, minus base_dir.
nlohmann::json to_json(const PipelineConfig& config);

/// SHA-256 (hex) of the normalized config excluding `workers` and
/// `output_dir`, which do not affect generated bytes.
std::string config_hash(const PipelineConfig& config);

std::filesystem::path resolve_path(const PipelineConfig& config, const std::string& path);

/// Loads the taxonomy file or the built-in one.
LabelTaxonomy load_taxonomy(const PipelineConfig& config);

/// Loads a raw template file or builds the built-in phantom.
LabelVolume load_template(const PipelineConfig& config, const std::string& path);

/// Hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace forge
