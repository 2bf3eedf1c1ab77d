#pragma once

// Rule-based gaze models: quantize gaze angles into nine qualitative
// directions, interpret them as robot / task / elsewhere, track runs of the
// same target, and score the mutual and confirmatory gaze patterns.

#include <cstddef>
#include <optional>
#include <string_view>

#include "helpsense/stream.hpp"
#include "helpsense/types.hpp"

namespace helpsense {

enum class GazeDirection { Up, UpRight, Right, DownRight, Down, DownLeft, Left, UpLeft, Center };

inline constexpr std::array kAllGazeDirections = {
    GazeDirection::Up,       GazeDirection::UpRight, GazeDirection::Right,
    GazeDirection::DownRight, GazeDirection::Down,   GazeDirection::DownLeft,
    GazeDirection::Left,     GazeDirection::UpLeft,  GazeDirection::Center,
};

enum class GazeTarget { Robot, Task, Elsewhere };

std::string_view to_string(GazeDirection direction);
std::string_view to_string(GazeTarget target);

/// Half-widths of the Center box, radians.
struct GazeThresholds {
  double yaw_center = 0.15;
  double pitch_center = 0.15;
};

/// Gaze longer than this is no longer a brief glance; it is also the
/// duration at which a gaze model saturates at 1.
inline constexpr Seconds kGlanceThreshold = 2.5;

struct GazeConfig {
  GazeThresholds thresholds;
  /// Consecutive frames of a new target required before the run switches.
  std::size_t debounce = 2;
  /// Observations below this confidence continue the current run.
  double min_confidence = 0.5;
};

/// Throws std::invalid_argument for zero/negative thresholds or debounce.
void validate(const GazeConfig& config);

struct GazeRun {
  GazeTarget target = GazeTarget::Elsewhere;
  Seconds start = 0.0;
  Seconds duration = 0.0;

  bool operator==(const GazeRun&) const = default;
};

/// Throws std::domain_error for non-finite angles.
GazeDirection classify_direction(const GazeObservation& obs, const GazeThresholds& thresholds);

/// Center is the robot, any downward direction is the task.
GazeTarget interpret_target(GazeDirection direction);

struct DirectionSample {
  GazeDirection direction = GazeDirection::Center;
  double confidence = 1.0;
};

struct TargetSample {
  GazeTarget target = GazeTarget::Elsewhere;
  double confidence = 1.0;
};

/// Current run plus the run it replaced, as seen after one frame.
struct GazeRunState {
  GazeRun current;
  std::optional<GazeRun> previous;
};

/// Debounced run-length tracker over a per-frame target sequence. The first
/// frame of an accepted switch becomes the new run's start.
class GazeSegmenter {
 public:
  explicit GazeSegmenter(std::size_t debounce = 2, double min_confidence = 0.5);

  GazeRunState update(Seconds t, const TargetSample& sample);

 private:
  std::size_t debounce_;
  double min_confidence_;
  std::optional<GazeRun> current_;
  std::optional<GazeRun> previous_;
  std::optional<GazeTarget> candidate_;
  std::size_t candidate_frames_ = 0;
  Seconds candidate_start_ = 0.0;
};

/// min(1, d/2.5) while looking at the robot, otherwise 0.
double mutual_gaze_need(const GazeRun& run);

/// A brief task glance followed by a brief robot glance, or the reverse,
/// scores min(1, d/2.5) on the current glance; anything else scores 0.
double confirmatory_gaze_need(const GazeRun& run, const std::optional<GazeRun>& previous);

struct GazeStreams {
  Stream<double>& mutual;
  Stream<double>& confirmatory;
};

/// Wires gaze_raw -> gaze_direction -> gaze_target -> need_mutual and
/// need_confirmatory. Non-finite observations are dropped as errors.
GazeStreams wire_gaze(Pipeline& pipeline, Stream<GazeObservation>& raw, const GazeConfig& config);

}  // namespace helpsense
