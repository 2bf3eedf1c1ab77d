#include "app/commands.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "helpsense/scenario.hpp"
#include "helpsense/wire.hpp"

namespace helpsense::app {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

std::vector<fs::path> session_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".session") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<SessionRecord> load_ds0(const fs::path& dir) {
  auto sessions = load_session_dir(dir);
  if (sessions.empty()) throw DataError("no .session files in " + dir.string());
  return sessions;
}

struct Manifest {
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> artifacts;  // relative path -> sha256
};

Manifest parse_manifest(std::string_view text, const std::string& origin) {
  Manifest m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    const std::string_view kind = line.substr(0, space);
    const std::string_view rest = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
    try {
      if (kind == "helpsense_manifest") {
        header = true;
      } else if (kind == "config") {
        const auto eq = rest.find('=');
        if (eq == std::string_view::npos) throw std::invalid_argument("expected key=value");
        m.config[std::string(rest.substr(0, eq))] = std::string(rest.substr(eq + 1));
      } else if (kind == "artifact" || kind == "input") {
        wire::FieldSet f(wire::split_fields(rest));
        f.expect_only({"path", "sha256"});
        if (kind == "artifact") m.artifacts[f.get("path")] = f.get("sha256");
      } else {
        throw std::invalid_argument("unknown record '" + std::string(kind) + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
  if (!header) throw ParseError(origin, 0, "missing manifest header");
  return m;
}

// Settings that shape the frames a forest was trained on.
const std::vector<std::string>& runtime_keys() {
  static const std::vector<std::string> keys = {"cadence_hz", "window_w", "gaze.yaw_center", "gaze.pitch_center",
                                                "gaze.debounce", "gaze.min_confidence"};
  return keys;
}

void check_manifest(const Config& config, const Manifest& manifest, const fs::path& models) {
  for (const auto& key : runtime_keys()) {
    auto it = manifest.config.find(key);
    if (it == manifest.config.end()) throw MismatchError("training manifest does not record " + key);
    Config trained;
    apply_setting(trained, key, it->second);
    const auto want = config_value(config, key);
    if (config_value(trained, key) != want) {
      throw MismatchError("config " + key + "=" + want + " differs from training manifest " + key + "=" +
                          it->second);
    }
  }
  for (const char* name : {kLanguageModelName, kForestModelName}) {
    auto it = manifest.artifacts.find(name);
    if (it == manifest.artifacts.end()) throw MismatchError(std::string("training manifest does not list ") + name);
    if (sha256_hex(read_file(models / name)) != it->second) {
      throw MismatchError((models / name).string() + " does not match the training manifest");
    }
  }
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

Config resolve_config(const CommonOptions& options) {
  Config config;
  if (options.config_file) apply_config_file(config, *options.config_file);
  for (const auto& setting : options.settings) {
    const auto eq = setting.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + setting + "'");
    apply_setting(config, setting.substr(0, eq), setting.substr(eq + 1));
  }
  if (options.seed) config.seed = *options.seed;
  if (options.cadence) config.pipeline.cadence_hz = *options.cadence;
  if (options.window) config.pipeline.window = *options.window;
  if (options.folds) config.folds = *options.folds;
  validate(config);
  return config;
}

void cmd_simulate(const Config& config, const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<ScenarioScript> scripts;
  if (options.corpus) {
    if (!options.scripts.empty()) throw std::invalid_argument("give script files or --corpus, not both");
    CorpusOptions corpus;
    corpus.sessions = *options.corpus;
    corpus.seed = config.seed;
    if (options.noise) corpus.noise = *options.noise;
    scripts = generate_corpus(corpus);
  } else {
    if (options.scripts.empty()) throw std::invalid_argument("no scripts given (use script files or --corpus N)");
    for (const auto& path : options.scripts) {
      auto script = load_script(path);
      if (options.noise) script.noise = *options.noise;
      scripts.push_back(std::move(script));
    }
  }
  std::map<std::string, bool> seen;
  for (const auto& s : scripts) {
    if (seen[s.script_id]) throw DataError("two scripts share the id " + s.script_id);
    seen[s.script_id] = true;
  }
  fs::create_directories(options.out);
  for (const auto& script : scripts) {
    if (options.scripts_out) save_script(script, *options.scripts_out / (script.script_id + ".script"));
    save_session(simulate(script), options.out / (script.script_id + ".session"));
  }
  out << "wrote " << scripts.size() << " sessions to " << options.out.string() << "\n";
  (void)err;
}

void cmd_train(const Config& config, const TrainOptions& options, std::ostream& out, std::ostream& err) {
  const fs::path ds0_dir = options.ds0.value_or(config.ds0_dir);
  const fs::path out_dir = options.out.value_or(config.models_dir);
  const auto inputs = session_files(ds0_dir);
  std::vector<SessionRecord> ds0;
  for (const auto& path : inputs) ds0.push_back(load_session(path));
  if (ds0.empty()) throw DataError("no .session files in " + ds0_dir.string());

  auto stage = [](const char* name, auto&& body) {
    try {
      return body();
    } catch (const ModelError& e) {
      throw ModelError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(std::string(name) + ": " + e.what());
    }
  };

  const auto nb = stage("stage 1 (language model)",
                        [&] { return train_language(ds0, config.nb_alpha, config.nb_aggregates); });
  const auto ds1 = stage("stage 1 (materialize DS1)", [&] { return stage1_materialize(ds0, nb, config.pipeline); });
  const auto forest =
      stage("stage 2 (fusion model)", [&] { return stage2_train(ds1, config.pipeline.window, config.forest); });

  std::vector<std::pair<std::string, std::string>> artifacts;
  auto emit = [&](const std::string& relative, const std::string& bytes) {
    write_file(out_dir / relative, bytes);
    artifacts.emplace_back(relative, sha256_hex(bytes));
  };
  emit(kLanguageModelName, nb.serialize());
  fs::create_directories(out_dir / kDs1DirName);
  for (const auto& session : ds1) {
    validate(session);
    emit(std::string(kDs1DirName) + "/" + session.session_id + ".session", serialize(session));
  }
  emit(kForestModelName, forest.serialize());

  std::string manifest = "helpsense_manifest version=1\n";
  std::istringstream lines(format_config(config, false));
  for (std::string line; std::getline(lines, line);) manifest += "config " + line + "\n";
  for (const auto& path : inputs) {
    manifest += "input path=" + wire::quote(path.filename().string()) + " sha256=" + sha256_hex(read_file(path)) + "\n";
  }
  for (const auto& [path, hash] : artifacts) manifest += "artifact path=" + wire::quote(path) + " sha256=" + hash + "\n";
  write_file(out_dir / kManifestName, manifest);

  out << "trained on " << ds0.size() << " sessions: " << nb.vocabulary_size() << " language features, "
      << forest.trees().size() << " trees; wrote " << (out_dir / kManifestName).string() << "\n";
  (void)err;
}

void cmd_eval(const Config& config, const EvalOptions& options, std::ostream& out, std::ostream& err) {
  const fs::path ds0_dir = options.ds0.value_or(config.ds0_dir);
  const auto ds0 = load_ds0(ds0_dir);
  if (ds0.size() < config.folds) {
    throw std::invalid_argument("cannot run " + std::to_string(config.folds) + "-fold evaluation on " +
                                std::to_string(ds0.size()) + " sessions");
  }
  const auto report = run_full_eval(ds0, to_eval_config(config));
  out << format_table(report);
  std::optional<fs::path> report_path = options.report;
  if (!report_path && !config.report_path.empty()) report_path = config.report_path;
  if (report_path) write_file(*report_path, format_key_values(report));
  (void)err;
}

std::string format_decision(const Decision& d) {
  using wire::format_fixed;
  return "t=" + format_fixed(d.frame.t, wire::kTimeDecimals) +
         " mutual=" + format_fixed(d.frame.mutual, wire::kValueDecimals) +
         " conf=" + format_fixed(d.frame.confirmatory, wire::kValueDecimals) +
         " lang=" + format_fixed(d.frame.language, wire::kValueDecimals) +
         " fused=" + format_fixed(d.vote.score, wire::kValueDecimals) + " help=" + std::to_string(d.vote.label);
}

void cmd_run(const Config& config, const RunOptions& options, std::istream& in, std::ostream& out,
             std::ostream& err) {
  if (options.live == options.session.has_value()) throw std::invalid_argument("give exactly one of --session or --live");
  const fs::path models = options.models.value_or(config.models_dir);
  const auto manifest = parse_manifest(read_file(models / kManifestName), (models / kManifestName).string());
  check_manifest(config, manifest, models);
  auto nb = NaiveBayesModel::parse(read_file(models / kLanguageModelName), (models / kLanguageModelName).string());
  auto forest = RandomForest::parse(read_file(models / kForestModelName), (models / kForestModelName).string());
  if (nb.aggregates() != config.nb_aggregates) {
    throw MismatchError(std::string("config nb_use_aggregates=") + (config.nb_aggregates ? "true" : "false") +
                        " differs from the trained language model");
  }

  PipelineClock clock;
  clock.mode = options.live ? PipelineClock::Mode::Live : PipelineClock::Mode::Replay;
  NeedPipeline runtime(config.pipeline, std::move(nb), std::move(forest), clock);
  std::size_t lines = 0;
  const bool flush = options.live;
  runtime.on_decision([&](const Decision& d) {
    out << format_decision(d) << '\n';
    if (flush) out.flush();
    ++lines;
  });

  if (options.session) {
    runtime.replay(load_session(*options.session));
  } else {
    std::optional<Seconds> last;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      const auto begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos || line[begin] == '#') continue;
      SessionLine record;
      try {
        record = parse_session_line(line);
      } catch (const std::invalid_argument& e) {
        throw ParseError("<stdin>", line_no, e.what());
      } catch (const WiringError& e) {
        throw ParseError("<stdin>", line_no, e.what());
      }
      const auto* message = std::get_if<RecordedMessage>(&record);
      if (!message) continue;
      try {
        if (message->stream == StreamId::GazeRaw) {
          runtime.push_gaze(message->t, std::get<GazeObservation>(message->payload));
        } else if (message->stream == StreamId::Utterance) {
          runtime.push_utterance(message->t, std::get<std::string>(message->payload));
        } else {
          continue;
        }
      } catch (const OrderingError& e) {
        throw ParseError("<stdin>", line_no, e.what());
      }
      last = last ? std::max(*last, message->t) : message->t;
    }
    if (last) runtime.finish(*last);
  }
  if (lines == 0) {
    err << "warning: input shorter than the " << config.pipeline.window << "-tick window; no decisions\n";
  }
}

namespace {

void add_common(CLI::App* app, CommonOptions& common, std::string& config_file, std::uint64_t& seed, double& cadence,
                std::size_t& window, std::size_t& folds) {
  app->add_option("--config", config_file, "key=value config file");
  app->add_option("--set", common.settings, "override a config key (key=value)");
  app->add_option("--seed", seed, "seed");
  app->add_option("--cadence", cadence, "fusion tick rate in Hz");
  app->add_option("--window", window, "window length in ticks");
  app->add_option("--folds", folds, "cross-validation folds");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Help-need detection from gaze and speech"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string config_file;
  std::uint64_t seed = 0;
  double cadence = 0.0;
  std::size_t window = 0;
  std::size_t folds = 0;

  SimulateOptions sim;
  std::vector<std::string> script_paths;
  std::size_t corpus = 0;
  double noise = 0.0;
  std::string sim_out;
  std::string scripts_out;
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate sessions from scenario scripts");
  simulate_cmd->add_option("scripts", script_paths, "scenario script files");
  simulate_cmd->add_option("--corpus", corpus, "generate N scripted sessions instead");
  simulate_cmd->add_option("--noise", noise, "angular noise (rad), overrides scripts");
  simulate_cmd->add_option("--scripts-out", scripts_out, "also write the scripts used");
  simulate_cmd->add_option("--out", sim_out, "output directory for DS0 sessions")->required();

  std::string ds0_arg;
  std::string out_arg;
  auto* train_cmd = app.add_subcommand("train", "two-stage training from a DS0 directory");
  train_cmd->add_option("ds0", ds0_arg, "DS0 session directory");
  train_cmd->add_option("--out", out_arg, "model output directory");

  std::string report_arg;
  auto* eval_cmd = app.add_subcommand("eval", "cross-validated evaluation of every model");
  eval_cmd->add_option("ds0", ds0_arg, "DS0 session directory");
  eval_cmd->add_option("--out,--report", report_arg, "write key=value report here");

  std::string models_arg;
  std::string session_arg;
  bool live = false;
  auto* run_cmd = app.add_subcommand("run", "per-tick decisions for a session or live input");
  run_cmd->add_option("--models", models_arg, "directory written by train");
  run_cmd->add_option("--session", session_arg, "DS0 session file to replay");
  run_cmd->add_flag("--live", live, "read session records from standard input");

  for (auto* cmd : {simulate_cmd, train_cmd, eval_cmd, run_cmd}) {
    add_common(cmd, common, config_file, seed, cadence, window, folds);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto* active = app.get_subcommands().front();
  auto given = [active](const char* name) { return active->count(name) > 0; };
  if (given("--config")) common.config_file = config_file;
  if (given("--seed")) common.seed = seed;
  if (given("--cadence")) common.cadence = cadence;
  if (given("--window")) common.window = window;
  if (given("--folds")) common.folds = folds;

  try {
    const Config config = resolve_config(common);
    if (active == simulate_cmd) {
      for (const auto& p : script_paths) sim.scripts.emplace_back(p);
      if (given("--corpus")) sim.corpus = corpus;
      if (given("--noise")) sim.noise = noise;
      if (given("--scripts-out")) sim.scripts_out = scripts_out;
      sim.out = sim_out;
      cmd_simulate(config, sim, out, err);
    } else if (active == train_cmd) {
      TrainOptions t;
      if (given("ds0")) t.ds0 = ds0_arg;
      if (given("--out")) t.out = out_arg;
      cmd_train(config, t, out, err);
    } else if (active == eval_cmd) {
      EvalOptions e;
      if (given("ds0")) e.ds0 = ds0_arg;
      if (given("--out")) e.report = report_arg;
      cmd_eval(config, e, out, err);
    } else {
      RunOptions r;
      if (given("--models")) r.models = models_arg;
      if (given("--session")) r.session = session_arg;
      r.live = live;
      cmd_run(config, r, in, out, err);
    }
  } catch (const MismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace helpsense::app
