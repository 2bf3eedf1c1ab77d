#pragma once

// Flat key=value configuration shared by every subcommand.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "helpsense/eval.hpp"

namespace helpsense::app {

struct Config {
  PipelineConfig pipeline;
  double nb_alpha = 1.0;
  bool nb_aggregates = true;
  ForestConfig forest;
  std::uint64_t seed = 0;
  std::size_t folds = 10;
  std::string ds0_dir = "ds0";
  std::string models_dir = "models";
  std::string report_path;
};

/// Every recognized key, in file order.
const std::vector<std::string>& config_keys();

/// Throws std::invalid_argument on an unknown key or a malformed value.
void apply_setting(Config& config, std::string_view key, std::string_view value);

/// Lines of `key=value`; '#' starts a comment. Errors name origin and line.
void apply_config_text(Config& config, std::string_view text, const std::string& origin);
void apply_config_file(Config& config, const std::filesystem::path& path);

std::string config_value(const Config& config, std::string_view key);

/// Canonical `key=value` lines. Path keys are omitted unless requested, so
/// the text depends only on model-relevant settings.
std::string format_config(const Config& config, bool include_paths);

/// Throws std::invalid_argument if any section fails validation.
void validate(const Config& config);

EvalConfig to_eval_config(const Config& config);

}  // namespace helpsense::app
