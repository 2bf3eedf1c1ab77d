#include "helpsense/types.hpp"

namespace helpsense {

std::string_view to_string(NeedLevelLabel level) {
  switch (level) {
    case NeedLevelLabel::Flow: return "Flow";
    case NeedLevelLabel::L0: return "L0";
    case NeedLevelLabel::L1: return "L1";
    case NeedLevelLabel::L2: return "L2";
    case NeedLevelLabel::L3: return "L3";
  }
  return "?";
}

std::optional<NeedLevelLabel> parse_need_level(std::string_view text) {
  for (auto level : kAllNeedLevels) {
    if (to_string(level) == text) return level;
  }
  return std::nullopt;
}

WindowedFeatureVector flatten_window(std::span<const FusionFrame> frames) {
  WindowedFeatureVector out;
  out.values.reserve(frames.size() * kValuesPerFrame);
  for (const auto& f : frames) {
    out.values.push_back(f.mutual);
    out.values.push_back(f.confirmatory);
    out.values.push_back(f.language);
  }
  if (!frames.empty()) out.anchor_t = frames.back().t;
  return out;
}

}  // namespace helpsense
