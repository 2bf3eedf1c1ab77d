#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace helpsense {

/// Originating time, seconds since session start.
using Seconds = double;

/// One gaze estimate from the face tracker. Angles in radians; positive yaw
/// is toward the user's right, positive pitch is upward.
struct GazeObservation {
  double yaw = 0.0;
  double pitch = 0.0;
  double confidence = 1.0;

  bool operator==(const GazeObservation&) const = default;
};

/// Transcribed speech, anchored at the time the transcript was finalized.
struct Utterance {
  std::string text;
  Seconds t = 0.0;

  bool operator==(const Utterance&) const = default;
};

enum class NeedLevelLabel { Flow, L0, L1, L2, L3 };

inline constexpr std::array kAllNeedLevels = {NeedLevelLabel::Flow, NeedLevelLabel::L0,
                                              NeedLevelLabel::L1, NeedLevelLabel::L2,
                                              NeedLevelLabel::L3};

std::string_view to_string(NeedLevelLabel level);
std::optional<NeedLevelLabel> parse_need_level(std::string_view text);

/// Levels 2 and 3 are the positive (robot should help) class.
constexpr bool is_help(NeedLevelLabel level) {
  return level == NeedLevelLabel::L2 || level == NeedLevelLabel::L3;
}

/// Weight used by the average-help statistic: Flow counts as -1.
constexpr double help_weight(NeedLevelLabel level) {
  switch (level) {
    case NeedLevelLabel::Flow: return -1.0;
    case NeedLevelLabel::L0: return 0.0;
    case NeedLevelLabel::L1: return 1.0;
    case NeedLevelLabel::L2: return 2.0;
    case NeedLevelLabel::L3: return 3.0;
  }
  return 0.0;
}

/// Per-tick triple of model outputs fed to the fusion classifier.
struct FusionFrame {
  Seconds t = 0.0;
  double mutual = 0.0;
  double confirmatory = 0.0;
  double language = 0.0;

  bool operator==(const FusionFrame&) const = default;
};

inline constexpr std::size_t kValuesPerFrame = 3;

/// Concatenation of consecutive frames, oldest first, each contributing
/// (mutual, confirmatory, language).
struct WindowedFeatureVector {
  std::vector<double> values;
  Seconds anchor_t = 0.0;

  bool operator==(const WindowedFeatureVector&) const = default;
};

WindowedFeatureVector flatten_window(std::span<const FusionFrame> frames);

}  // namespace helpsense
