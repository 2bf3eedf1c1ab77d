#include "helpsense/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "helpsense/wire.hpp"

namespace helpsense {

std::string_view to_string(GazeBehavior behavior) {
  switch (behavior) {
    case GazeBehavior::FixTask: return "fix-task";
    case GazeBehavior::FixRobot: return "fix-robot";
    case GazeBehavior::FixAway: return "fix-away";
    case GazeBehavior::AlternateTaskRobot: return "alternate-task-robot";
  }
  return "?";
}

std::optional<GazeBehavior> parse_gaze_behavior(std::string_view text) {
  for (auto b : {GazeBehavior::FixTask, GazeBehavior::FixRobot, GazeBehavior::FixAway,
                 GazeBehavior::AlternateTaskRobot}) {
    if (to_string(b) == text) return b;
  }
  return std::nullopt;
}

namespace {

std::int64_t to_ms(Seconds s) { return std::llround(s * 1000.0); }
Seconds from_ms(std::int64_t ms) { return static_cast<double>(ms) / 1000.0; }

constexpr double kTaskPitch = -0.45;
constexpr double kAwayYaw = 0.55;
constexpr double kAwayPitch = 0.30;

}  // namespace

void validate(const ScenarioScript& script) {
  const std::string origin = "script " + script.script_id;
  if (script.script_id.empty()) throw DataError("script id is empty");
  if (script.segments.empty()) throw DataError(origin + ": no segments");
  if (!(script.noise >= 0.0) || !std::isfinite(script.noise)) throw DataError(origin + ": noise must be >= 0");
  for (std::size_t i = 0; i < script.segments.size(); ++i) {
    const auto& s = script.segments[i];
    const std::string where = origin + ": segment " + std::to_string(i + 1);
    if (to_ms(s.duration) <= 0) throw DataError(where + ": duration must be > 0");
    if (s.gaze == GazeBehavior::AlternateTaskRobot && !(s.period > 0.0)) {
      throw DataError(where + ": alternate-task-robot needs period > 0");
    }
    std::int64_t last = -1;
    for (const auto& u : s.utterances) {
      const auto ms = to_ms(u.offset);
      if (ms < 0 || ms >= to_ms(s.duration)) throw DataError(where + ": utterance offset outside segment");
      if (ms <= last) throw DataError(where + ": utterance offsets must increase");
      if (u.text.find_first_not_of(" \t\r\n") == std::string::npos) throw DataError(where + ": empty utterance");
      last = ms;
    }
  }
}

std::string serialize(const ScenarioScript& script) {
  using wire::format_fixed;
  std::string out = "format_version=1 script_id=" + script.script_id +
                    " noise=" + format_fixed(script.noise, wire::kValueDecimals) +
                    " seed=" + std::to_string(script.seed) + "\n";
  for (const auto& s : script.segments) {
    out += "segment duration=" + format_fixed(s.duration, wire::kTimeDecimals) +
           " level=" + std::string(to_string(s.level)) + " gaze=" + std::string(to_string(s.gaze));
    if (s.gaze == GazeBehavior::AlternateTaskRobot) out += " period=" + format_fixed(s.period, wire::kTimeDecimals);
    out += "\n";
    for (const auto& u : s.utterances) {
      out += "utterance offset=" + format_fixed(u.offset, wire::kTimeDecimals) + " text=" + wire::quote(u.text) + "\n";
    }
  }
  return out;
}

ScenarioScript parse_script(std::string_view text, const std::string& origin) {
  ScenarioScript script;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos || line[begin] == '#') continue;
    line.remove_prefix(begin);
    try {
      const auto space = line.find_first_of(" \t");
      const std::string_view head = line.substr(0, space);
      const std::string_view tail = space == std::string_view::npos ? std::string_view{} : line.substr(space);
      if (!have_header) {
        wire::FieldSet f(wire::split_fields(line));
        f.expect_only({"format_version", "script_id", "noise", "seed"});
        if (wire::parse_int(f.get("format_version")) != 1) throw std::invalid_argument("unsupported format_version");
        script.script_id = f.get("script_id");
        script.noise = f.number("noise");
        script.seed = wire::parse_uint(f.get("seed"));
        have_header = true;
      } else if (head == "segment") {
        wire::FieldSet f(wire::split_fields(tail));
        f.expect_only({"duration", "level", "gaze", "period"});
        ScriptSegment s;
        s.duration = f.number("duration");
        auto level = parse_need_level(f.get("level"));
        if (!level) throw std::invalid_argument("unknown need level '" + f.get("level") + "'");
        s.level = *level;
        auto gaze = parse_gaze_behavior(f.get("gaze"));
        if (!gaze) throw std::invalid_argument("unknown gaze behavior '" + f.get("gaze") + "'");
        s.gaze = *gaze;
        if (f.has("period")) s.period = f.number("period");
        if (s.gaze == GazeBehavior::AlternateTaskRobot && !(s.period > 0.0)) {
          throw std::invalid_argument("alternate-task-robot needs period > 0");
        }
        if (!(s.duration > 0.0)) throw std::invalid_argument("segment duration must be > 0");
        script.segments.push_back(std::move(s));
      } else if (head == "utterance") {
        if (script.segments.empty()) throw std::invalid_argument("utterance before any segment");
        wire::FieldSet f(wire::split_fields(tail));
        f.expect_only({"offset", "text"});
        auto& seg = script.segments.back();
        ScriptedUtterance u{f.number("offset"), f.get("text")};
        if (u.offset < 0.0 || !(u.offset < seg.duration)) throw std::invalid_argument("utterance offset outside segment");
        seg.utterances.push_back(std::move(u));
      } else {
        throw std::invalid_argument("unknown record '" + std::string(head) + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(origin, 0, "missing header");
  try {
    validate(script);
  } catch (const DataError& e) {
    throw ParseError(origin, 0, e.what());
  }
  return script;
}

ScenarioScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_script(buffer.str(), path.string());
}

void save_script(const ScenarioScript& script, const std::filesystem::path& path) {
  validate(script);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize(script);
}

GazeObservation scripted_gaze(const ScriptSegment& segment, std::size_t segment_index, Seconds into) {
  switch (segment.gaze) {
    case GazeBehavior::FixTask: return {0.0, kTaskPitch, 1.0};
    case GazeBehavior::FixRobot: return {0.0, 0.0, 1.0};
    case GazeBehavior::FixAway:
      // Alternate sides between segments so both horizontal sectors occur.
      return segment_index % 2 == 0 ? GazeObservation{kAwayYaw, kAwayPitch, 1.0}
                                    : GazeObservation{-kAwayYaw, 0.0, 1.0};
    case GazeBehavior::AlternateTaskRobot: {
      const auto glance = static_cast<std::int64_t>(std::floor(into / segment.period));
      return glance % 2 == 0 ? GazeObservation{0.0, kTaskPitch, 1.0} : GazeObservation{0.0, 0.0, 1.0};
    }
  }
  return {};
}

SessionRecord simulate(const ScenarioScript& script) {
  validate(script);
  SessionRecord record;
  record.session_id = script.script_id;

  std::vector<std::int64_t> starts;
  std::int64_t total_ms = 0;
  for (const auto& s : script.segments) {
    starts.push_back(total_ms);
    const std::int64_t end = total_ms + to_ms(s.duration);
    record.labels.push_back({from_ms(total_ms), from_ms(end), s.level});
    for (const auto& u : s.utterances) {
      record.messages.push_back({StreamId::Utterance, from_ms(total_ms + to_ms(u.offset)), u.text});
    }
    total_ms = end;
  }
  record.duration = from_ms(total_ms);

  std::mt19937_64 rng(script.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t segment = 0;
  for (std::int64_t k = 0;; ++k) {
    const std::int64_t ms = std::llround(static_cast<double>(k) * 1000.0 / kSimulatedGazeHz);
    if (ms >= total_ms) break;
    while (segment + 1 < starts.size() && ms >= starts[segment + 1]) ++segment;
    const auto& seg = script.segments[segment];
    GazeObservation obs = scripted_gaze(seg, segment, from_ms(ms - starts[segment]));
    const double dy = noise(rng);
    const double dp = noise(rng);
    if (script.noise > 0.0) {
      obs.yaw += script.noise * dy;
      obs.pitch += script.noise * dp;
    }
    obs.yaw = wire::quantize_value(obs.yaw);
    obs.pitch = wire::quantize_value(obs.pitch);
    record.messages.push_back({StreamId::GazeRaw, from_ms(ms), obs});
  }
  canonicalize(record);
  validate(record);
  return record;
}

namespace {

// Phrase pools. Some phrasing (e.g. "okay", "hmm") appears on both sides so
// the language model alone cannot be perfect.
const std::vector<std::string> kFlowPhrases = {
    "this is fun", "okay this goes here", "looks good", "i think i got it", "nice", "okay",
    "that fits", "almost there", "cool", "alright next piece"};
const std::vector<std::string> kStallPhrases = {"hmm", "okay", "let me see", "wait", "hmm okay"};
const std::vector<std::string> kResourcePhrases = {
    "where does this piece go", "which one is the wing", "i'm not sure", "hmm where is it",
    "that doesn't look right", "okay", "let me see the picture"};
const std::vector<std::string> kAppealPhrases = {
    "can you help me", "i can't find the last piece", "what am i missing", "could you help me please",
    "i don't know where this goes", "is this right", "help", "which piece do i need"};

}  // namespace

std::vector<ScenarioScript> generate_corpus(const CorpusOptions& options) {
  std::vector<ScenarioScript> scripts;
  std::mt19937_64 rng(options.seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto chance = [&](double p) { return uniform(0.0, 1.0) < p; };
  auto pick = [&rng](const std::vector<std::string>& pool) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };
  auto ms_round = [](double s) { return from_ms(to_ms(s)); };

  for (std::size_t i = 0; i < options.sessions; ++i) {
    ScenarioScript script;
    char id[32];
    std::snprintf(id, sizeof id, "sim%03zu", i + 1);
    script.script_id = id;
    script.noise = options.noise;
    script.seed = options.seed * 1000003ULL + i;

    auto add = [&](double duration, NeedLevelLabel level, GazeBehavior gaze, double period = 0.0) -> ScriptSegment& {
      ScriptSegment s;
      s.duration = ms_round(duration);
      s.level = level;
      s.gaze = gaze;
      s.period = ms_round(period);
      script.segments.push_back(std::move(s));
      return script.segments.back();
    };
    auto say = [&](ScriptSegment& s, double offset, std::string text) {
      s.utterances.push_back({ms_round(std::min(offset, s.duration - 0.1)), std::move(text)});
    };

    for (std::size_t c = 0; c < options.cycles; ++c) {
      auto& flow = add(uniform(5.0, 10.0), NeedLevelLabel::Flow, GazeBehavior::FixTask);
      if (chance(0.6)) say(flow, uniform(0.5, flow.duration - 0.5), pick(kFlowPhrases));

      if (chance(0.5)) {
        auto& stall = add(uniform(2.0, 4.0), NeedLevelLabel::L0,
                          chance(0.5) ? GazeBehavior::FixTask : GazeBehavior::FixAway);
        if (chance(0.3)) say(stall, uniform(0.3, stall.duration - 0.3), pick(kStallPhrases));
      }
      if (chance(0.5)) {
        auto& confirm = add(uniform(2.0, 4.0), NeedLevelLabel::L1, GazeBehavior::FixAway);
        if (chance(0.4)) say(confirm, uniform(0.3, confirm.duration - 0.3), pick(kStallPhrases));
      }

      if (chance(0.5)) {
        auto& resource =
            add(uniform(4.0, 8.0), NeedLevelLabel::L2, GazeBehavior::AlternateTaskRobot, uniform(0.9, 1.7));
        if (chance(0.6)) say(resource, uniform(0.5, resource.duration * 0.6), pick(kResourcePhrases));
      } else {
        auto& appeal = add(uniform(4.0, 8.0), NeedLevelLabel::L3,
                           chance(0.75) ? GazeBehavior::FixRobot : GazeBehavior::AlternateTaskRobot,
                           uniform(0.9, 1.7));
        say(appeal, uniform(0.3, 1.5), pick(kAppealPhrases));
        if (chance(0.3)) say(appeal, appeal.duration - uniform(0.5, 1.5), pick(kAppealPhrases));
      }
    }
    auto& tail = add(uniform(4.0, 8.0), NeedLevelLabel::Flow, GazeBehavior::FixTask);
    if (chance(0.5)) say(tail, uniform(0.5, tail.duration - 0.5), pick(kFlowPhrases));

    // Offsets must strictly increase within a segment.
    for (auto& s : script.segments) {
      std::sort(s.utterances.begin(), s.utterances.end(),
                [](const ScriptedUtterance& a, const ScriptedUtterance& b) { return a.offset < b.offset; });
      for (std::size_t u = 1; u < s.utterances.size(); ++u) {
        if (to_ms(s.utterances[u].offset) <= to_ms(s.utterances[u - 1].offset)) {
          s.utterances.erase(s.utterances.begin() + static_cast<std::ptrdiff_t>(u));
          --u;
        }
      }
    }
    validate(script);
    scripts.push_back(std::move(script));
  }
  return scripts;
}

}  // namespace helpsense
