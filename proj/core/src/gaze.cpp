#include "helpsense/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace helpsense {

std::string_view to_string(GazeDirection direction) {
  switch (direction) {
    case GazeDirection::Up: return "Up";
    case GazeDirection::UpRight: return "UpRight";
    case GazeDirection::Right: return "Right";
    case GazeDirection::DownRight: return "DownRight";
    case GazeDirection::Down: return "Down";
    case GazeDirection::DownLeft: return "DownLeft";
    case GazeDirection::Left: return "Left";
    case GazeDirection::UpLeft: return "UpLeft";
    case GazeDirection::Center: return "Center";
  }
  return "?";
}

std::string_view to_string(GazeTarget target) {
  switch (target) {
    case GazeTarget::Robot: return "Robot";
    case GazeTarget::Task: return "Task";
    case GazeTarget::Elsewhere: return "Elsewhere";
  }
  return "?";
}

void validate(const GazeConfig& config) {
  if (!(config.thresholds.yaw_center > 0.0) || !(config.thresholds.pitch_center > 0.0)) {
    throw std::invalid_argument("gaze thresholds must be > 0");
  }
  if (config.debounce < 1) throw std::invalid_argument("gaze debounce must be >= 1");
  if (!(config.min_confidence >= 0.0 && config.min_confidence <= 1.0)) {
    throw std::invalid_argument("gaze min_confidence must be in [0,1]");
  }
}

GazeDirection classify_direction(const GazeObservation& obs, const GazeThresholds& thresholds) {
  if (!std::isfinite(obs.yaw) || !std::isfinite(obs.pitch)) {
    throw std::domain_error("non-finite gaze angle");
  }
  const int horizontal = obs.yaw > thresholds.yaw_center ? 1 : (obs.yaw < -thresholds.yaw_center ? -1 : 0);
  const int vertical = obs.pitch > thresholds.pitch_center ? 1 : (obs.pitch < -thresholds.pitch_center ? -1 : 0);
  static constexpr GazeDirection table[3][3] = {
      // horizontal: left, none, right
      {GazeDirection::DownLeft, GazeDirection::Down, GazeDirection::DownRight},  // down
      {GazeDirection::Left, GazeDirection::Center, GazeDirection::Right},        // level
      {GazeDirection::UpLeft, GazeDirection::Up, GazeDirection::UpRight},        // up
  };
  return table[vertical + 1][horizontal + 1];
}

GazeTarget interpret_target(GazeDirection direction) {
  switch (direction) {
    case GazeDirection::Center: return GazeTarget::Robot;
    case GazeDirection::Down:
    case GazeDirection::DownLeft:
    case GazeDirection::DownRight: return GazeTarget::Task;
    default: return GazeTarget::Elsewhere;
  }
}

GazeSegmenter::GazeSegmenter(std::size_t debounce, double min_confidence)
    : debounce_(debounce), min_confidence_(min_confidence) {
  if (debounce_ < 1) throw std::invalid_argument("debounce must be >= 1");
}

GazeRunState GazeSegmenter::update(Seconds t, const TargetSample& sample) {
  if (!current_) {
    current_ = GazeRun{sample.target, t, 0.0};
  } else if (sample.confidence < min_confidence_) {
    // Tracker dropout: the run continues and a pending switch neither
    // advances nor resets.
  } else if (sample.target == current_->target) {
    candidate_.reset();
    candidate_frames_ = 0;
  } else {
    if (candidate_ != sample.target) {
      candidate_ = sample.target;
      candidate_frames_ = 0;
      candidate_start_ = t;
    }
    if (++candidate_frames_ >= debounce_) {
      previous_ = GazeRun{current_->target, current_->start, candidate_start_ - current_->start};
      current_ = GazeRun{sample.target, candidate_start_, 0.0};
      candidate_.reset();
      candidate_frames_ = 0;
    }
  }
  current_->duration = t - current_->start;
  return {*current_, previous_};
}

double mutual_gaze_need(const GazeRun& run) {
  if (run.target != GazeTarget::Robot) return 0.0;
  return std::min(1.0, run.duration / kGlanceThreshold);
}

double confirmatory_gaze_need(const GazeRun& run, const std::optional<GazeRun>& previous) {
  if (!previous) return 0.0;
  const bool back_and_forth =
      (previous->target == GazeTarget::Task && run.target == GazeTarget::Robot) ||
      (previous->target == GazeTarget::Robot && run.target == GazeTarget::Task);
  if (!back_and_forth) return 0.0;
  if (!(previous->duration < kGlanceThreshold) || !(run.duration < kGlanceThreshold)) return 0.0;
  return std::min(1.0, run.duration / kGlanceThreshold);
}

GazeStreams wire_gaze(Pipeline& pipeline, Stream<GazeObservation>& raw, const GazeConfig& config) {
  validate(config);
  const GazeThresholds thresholds = config.thresholds;
  auto& directions = pipeline.map(
      raw,
      [thresholds](const GazeObservation& obs) {
        return DirectionSample{classify_direction(obs, thresholds), obs.confidence};
      },
      StreamId::GazeDirection);
  auto& targets = pipeline.map(
      directions,
      [](const DirectionSample& d) { return TargetSample{interpret_target(d.direction), d.confidence}; },
      StreamId::GazeTarget);
  auto segmenter = std::make_shared<GazeSegmenter>(config.debounce, config.min_confidence);
  auto& runs = pipeline.process(
      targets, [segmenter](const Message<TargetSample>& m) { return segmenter->update(m.t, m.payload); });
  auto& mutual =
      pipeline.map(runs, [](const GazeRunState& s) { return mutual_gaze_need(s.current); }, StreamId::NeedMutual);
  auto& confirmatory = pipeline.map(
      runs, [](const GazeRunState& s) { return confirmatory_gaze_need(s.current, s.previous); },
      StreamId::NeedConfirmatory);
  return {mutual, confirmatory};
}

}  // namespace helpsense
