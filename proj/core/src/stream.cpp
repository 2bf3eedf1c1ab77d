#include "helpsense/stream.hpp"

#include <thread>

#include "helpsense/wire.hpp"

namespace helpsense {

std::string_view to_string(StreamId id) {
  switch (id) {
    case StreamId::GazeRaw: return "gaze_raw";
    case StreamId::GazeDirection: return "gaze_direction";
    case StreamId::GazeTarget: return "gaze_target";
    case StreamId::NeedMutual: return "need_mutual";
    case StreamId::NeedConfirmatory: return "need_confirmatory";
    case StreamId::Utterance: return "utterance";
    case StreamId::NeedLanguage: return "need_language";
    case StreamId::FusionFrame: return "fusion_frame";
    case StreamId::NeedFused: return "need_fused";
    case StreamId::Label: return "label";
  }
  return "?";
}

std::optional<StreamId> find_stream_id(std::string_view name) {
  for (auto id : kAllStreamIds) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

StreamId parse_stream_id(std::string_view name) {
  if (auto id = find_stream_id(name)) return *id;
  throw WiringError("unknown stream '" + std::string(name) + "'");
}

void StreamBase::check_order(Seconds t) const {
  if (closed_) throw OrderingError("stream " + name_ + ": emit after close");
  if (!std::isfinite(t) || t < 0.0) {
    throw OrderingError("stream " + name_ + ": invalid originating time");
  }
  if (last_time_ && !(t > *last_time_)) {
    throw OrderingError("stream " + name_ + ": originating time " + wire::format_short(t) +
                        " is not after " + wire::format_short(*last_time_));
  }
}

Pipeline::Pipeline(PipelineClock clock) : clock_(clock) {
  if (!(clock_.replay_speed > 0.0)) throw std::invalid_argument("replay speed must be > 0");
}

void Pipeline::advance(Seconds limit, bool inclusive) {
  while (true) {
    TickSource* next = nullptr;
    for (auto& source : tick_sources_) {
      if (source.output->closed()) continue;
      const Seconds t = source.next_time();
      const bool due = inclusive ? t <= limit : t < limit;
      if (due && (!next || t < next->next_time())) next = &source;
    }
    if (!next) return;
    const Seconds t = next->next_time();
    ++next->next;
    next->fire(t);
  }
}

void Pipeline::finish(Seconds end) {
  advance_through(end);
  watermark_ = watermark_ ? std::max(*watermark_, end) : end;
  std::vector<StreamBase*> to_close;
  for (const auto& stream : streams_) {
    const bool produced =
        std::find(produced_.begin(), produced_.end(), stream.get()) != produced_.end();
    if (!produced) to_close.push_back(stream.get());
  }
  for (const auto& source : tick_sources_) to_close.push_back(source.output);
  for (StreamBase* s : to_close) s->close();
}

void ReplayScheduler::run(Pipeline& pipeline, Seconds end) {
  std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.seq < b.seq;
  });
  const double speed = pipeline.clock().replay_speed;
  const bool paced = pipeline.clock().mode == PipelineClock::Mode::Replay && std::isfinite(speed);
  const auto start = std::chrono::steady_clock::now();
  for (auto& event : events_) {
    if (paced) {
      std::this_thread::sleep_until(
          start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(event.t / speed)));
    }
    event.deliver(pipeline);
  }
  pipeline.finish(end);
}

}  // namespace helpsense
