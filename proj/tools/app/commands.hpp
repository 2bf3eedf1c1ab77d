#pragma once

// Subcommands of the helpsense tool. Each command writes results to `out`
// and diagnostics to `err`, and reports failures by throwing; run_cli maps
// exceptions onto exit codes.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "helpsense/errors.hpp"
#include "helpsense/fusion.hpp"

namespace helpsense::app {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitMismatch = 4 };

/// Models on disk disagree with the requested configuration.
class MismatchError : public Error {
 public:
  using Error::Error;
};

struct CommonOptions {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> settings;  // key=value overrides
  std::optional<std::uint64_t> seed;
  std::optional<double> cadence;
  std::optional<std::size_t> window;
  std::optional<std::size_t> folds;
};

/// Defaults, then the config file, then --set overrides, then dedicated flags.
Config resolve_config(const CommonOptions& options);

struct SimulateOptions {
  std::vector<std::filesystem::path> scripts;
  std::optional<std::size_t> corpus;  // generate this many sessions instead of reading scripts
  std::optional<double> noise;
  std::optional<std::filesystem::path> scripts_out;
  std::filesystem::path out;
};
void cmd_simulate(const Config& config, const SimulateOptions& options, std::ostream& out, std::ostream& err);

struct TrainOptions {
  std::optional<std::filesystem::path> ds0;
  std::optional<std::filesystem::path> out;
};
void cmd_train(const Config& config, const TrainOptions& options, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::optional<std::filesystem::path> ds0;
  std::optional<std::filesystem::path> report;
};
void cmd_eval(const Config& config, const EvalOptions& options, std::ostream& out, std::ostream& err);

struct RunOptions {
  std::optional<std::filesystem::path> models;
  std::optional<std::filesystem::path> session;
  bool live = false;
};
void cmd_run(const Config& config, const RunOptions& options, std::istream& in, std::ostream& out,
             std::ostream& err);

/// `t=<s> mutual=<v> conf=<v> lang=<v> fused=<score> help=<0|1>`
std::string format_decision(const Decision& decision);

std::string sha256_hex(std::string_view bytes);

inline constexpr const char* kManifestName = "manifest.txt";
inline constexpr const char* kLanguageModelName = "nb.model";
inline constexpr const char* kForestModelName = "rf.model";
inline constexpr const char* kDs1DirName = "ds1";

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace helpsense::app
