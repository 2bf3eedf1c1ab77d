#include "app/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "helpsense/errors.hpp"
#include "helpsense/wire.hpp"

namespace helpsense::app {

namespace {

std::size_t parse_count(std::string_view value) { return static_cast<std::size_t>(wire::parse_uint(value)); }

std::optional<std::size_t> parse_optional_count(std::string_view value, std::string_view none_word) {
  if (value == none_word) return std::nullopt;
  return parse_count(value);
}

std::string optional_text(const std::optional<std::size_t>& value, std::string_view none_word) {
  return value ? std::to_string(*value) : std::string(none_word);
}

bool is_path_key(std::string_view key) { return key.substr(0, 6) == "paths."; }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "cadence_hz",        "window_w",
      "gaze.yaw_center",   "gaze.pitch_center",
      "gaze.debounce",     "gaze.min_confidence",
      "nb_alpha",          "nb_use_aggregates",
      "forest.n_trees",    "forest.max_depth",
      "forest.min_samples_leaf", "forest.features_per_split",
      "forest.bootstrap",  "forest.seed",
      "seed",              "folds",
      "paths.ds0",         "paths.models",
      "paths.report"};
  return keys;
}

void apply_setting(Config& c, std::string_view key, std::string_view value) {
  try {
    if (key == "cadence_hz") c.pipeline.cadence_hz = wire::parse_double(value);
    else if (key == "window_w") c.pipeline.window = parse_count(value);
    else if (key == "gaze.yaw_center") c.pipeline.gaze.thresholds.yaw_center = wire::parse_double(value);
    else if (key == "gaze.pitch_center") c.pipeline.gaze.thresholds.pitch_center = wire::parse_double(value);
    else if (key == "gaze.debounce") c.pipeline.gaze.debounce = parse_count(value);
    else if (key == "gaze.min_confidence") c.pipeline.gaze.min_confidence = wire::parse_double(value);
    else if (key == "nb_alpha") c.nb_alpha = wire::parse_double(value);
    else if (key == "nb_use_aggregates") c.nb_aggregates = wire::parse_bool(value);
    else if (key == "forest.n_trees") c.forest.n_trees = parse_count(value);
    else if (key == "forest.max_depth") c.forest.max_depth = parse_optional_count(value, "none");
    else if (key == "forest.min_samples_leaf") c.forest.min_samples_leaf = parse_count(value);
    else if (key == "forest.features_per_split") c.forest.features_per_split = parse_optional_count(value, "auto");
    else if (key == "forest.bootstrap") c.forest.bootstrap = wire::parse_bool(value);
    else if (key == "forest.seed") c.forest.seed = wire::parse_uint(value);
    else if (key == "seed") c.seed = wire::parse_uint(value);
    else if (key == "folds") c.folds = parse_count(value);
    else if (key == "paths.ds0") c.ds0_dir = std::string(value);
    else if (key == "paths.models") c.models_dir = std::string(value);
    else if (key == "paths.report") c.report_path = std::string(value);
    else throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind("unknown config key", 0) == 0) throw;
    throw std::invalid_argument("bad value '" + std::string(value) + "' for " + std::string(key) + ": " + what);
  }
}

void apply_config_text(Config& config, std::string_view text, const std::string& origin) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(origin, line_no, "expected key=value");
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    key = key.substr(0, key.find_last_not_of(" \t") + 1);
    value.remove_prefix(std::min(value.size(), value.find_first_not_of(" \t")));
    try {
      apply_setting(config, key, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
}

void apply_config_file(Config& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(config, buffer.str(), path.string());
}

std::string config_value(const Config& c, std::string_view key) {
  if (key == "cadence_hz") return wire::format_exact(c.pipeline.cadence_hz);
  if (key == "window_w") return std::to_string(c.pipeline.window);
  if (key == "gaze.yaw_center") return wire::format_exact(c.pipeline.gaze.thresholds.yaw_center);
  if (key == "gaze.pitch_center") return wire::format_exact(c.pipeline.gaze.thresholds.pitch_center);
  if (key == "gaze.debounce") return std::to_string(c.pipeline.gaze.debounce);
  if (key == "gaze.min_confidence") return wire::format_exact(c.pipeline.gaze.min_confidence);
  if (key == "nb_alpha") return wire::format_exact(c.nb_alpha);
  if (key == "nb_use_aggregates") return c.nb_aggregates ? "true" : "false";
  if (key == "forest.n_trees") return std::to_string(c.forest.n_trees);
  if (key == "forest.max_depth") return optional_text(c.forest.max_depth, "none");
  if (key == "forest.min_samples_leaf") return std::to_string(c.forest.min_samples_leaf);
  if (key == "forest.features_per_split") return optional_text(c.forest.features_per_split, "auto");
  if (key == "forest.bootstrap") return c.forest.bootstrap ? "true" : "false";
  if (key == "forest.seed") return std::to_string(c.forest.seed);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "folds") return std::to_string(c.folds);
  if (key == "paths.ds0") return c.ds0_dir;
  if (key == "paths.models") return c.models_dir;
  if (key == "paths.report") return c.report_path;
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

std::string format_config(const Config& config, bool include_paths) {
  std::string out;
  for (const auto& key : config_keys()) {
    if (!include_paths && is_path_key(key)) continue;
    out += key + "=" + config_value(config, key) + "\n";
  }
  return out;
}

void validate(const Config& config) {
  validate(config.pipeline);
  validate(config.forest);
  if (!(config.nb_alpha > 0.0)) throw std::invalid_argument("nb_alpha must be > 0");
  if (config.folds < 2) throw std::invalid_argument("folds must be >= 2");
}

EvalConfig to_eval_config(const Config& config) {
  EvalConfig e;
  e.pipeline = config.pipeline;
  e.nb_alpha = config.nb_alpha;
  e.nb_aggregates = config.nb_aggregates;
  e.forest = config.forest;
  e.folds = config.folds;
  e.seed = config.seed;
  return e;
}

}  // namespace helpsense::app
