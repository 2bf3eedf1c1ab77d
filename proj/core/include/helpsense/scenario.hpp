#pragma once

// Scripted session generator: a desk-scale stand-in for recorded user
// sessions. Script file format, one record per line:
//
//   format_version=1 script_id=<id> noise=<rad> seed=<n>
//   segment duration=<s> level=<Flow|L0..L3> gaze=<behavior> [period=<s>]
//   utterance offset=<s> text="<escaped>"     (belongs to the last segment)
//
// with behavior one of fix-task, fix-robot, fix-away, alternate-task-robot.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "helpsense/session.hpp"

namespace helpsense {

enum class GazeBehavior { FixTask, FixRobot, FixAway, AlternateTaskRobot };

std::string_view to_string(GazeBehavior behavior);
std::optional<GazeBehavior> parse_gaze_behavior(std::string_view text);

/// Gaze sampling rate of simulated sessions.
inline constexpr double kSimulatedGazeHz = 30.0;

struct ScriptedUtterance {
  Seconds offset = 0.0;
  std::string text;

  bool operator==(const ScriptedUtterance&) const = default;
};

struct ScriptSegment {
  Seconds duration = 0.0;
  NeedLevelLabel level = NeedLevelLabel::Flow;
  GazeBehavior gaze = GazeBehavior::FixTask;
  /// Length of each glance for alternate-task-robot, starting on the task.
  Seconds period = 0.0;
  std::vector<ScriptedUtterance> utterances;

  bool operator==(const ScriptSegment&) const = default;
};

struct ScenarioScript {
  std::string script_id;
  std::vector<ScriptSegment> segments;
  double noise = 0.0;  // angular std-dev, radians
  std::uint64_t seed = 0;

  bool operator==(const ScenarioScript&) const = default;
};

/// Throws DataError on empty scripts, non-positive durations or periods, and
/// utterance offsets outside their segment.
void validate(const ScenarioScript& script);

std::string serialize(const ScenarioScript& script);
ScenarioScript parse_script(std::string_view text, const std::string& origin = "<script>");
ScenarioScript load_script(const std::filesystem::path& path);
void save_script(const ScenarioScript& script, const std::filesystem::path& path);

/// Gaze at 30 Hz following the scripted behavior plus seeded Gaussian noise,
/// utterances at their scripted times, one label span per segment. All
/// values are rounded to file precision, so save/load returns the same record.
SessionRecord simulate(const ScenarioScript& script);

/// Nominal gaze angles for a behavior (before noise) at offset `into` seconds
/// from the segment start.
GazeObservation scripted_gaze(const ScriptSegment& segment, std::size_t segment_index, Seconds into);

struct CorpusOptions {
  std::size_t sessions = 24;
  std::uint64_t seed = 1;
  double noise = 0.04;
  /// Help cycles per session.
  std::size_t cycles = 4;
};

/// Synthetic suite whose gaze patterns and help-seeking utterances correlate
/// with L2/L3 spans, with overlapping phrasing and gaze noise.
std::vector<ScenarioScript> generate_corpus(const CorpusOptions& options);

}  // namespace helpsense
