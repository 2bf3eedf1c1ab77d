#pragma once

// Persisted session recordings: raw sensor data (DS0) and materialized model
// outputs (DS1), need-level labels, and export to training rows.
//
// File format (UTF-8, one record per line):
//
//   format_version=1 session_id=<id> duration=<s>
//   stream=label start=<s> end=<s> level=<Flow|L0|L1|L2|L3>
//   stream=gaze_raw t=<s> yaw=<rad> pitch=<rad> conf=<0..1>
//   stream=utterance t=<s> text="<escaped>"
//   stream=need_<name> t=<s> v=<0..1>
//
// Times carry 3 decimals, angles and values 6. The canonical form lists
// labels by start, then messages by (t, stream order, arrival).

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "helpsense/stream.hpp"
#include "helpsense/types.hpp"

namespace helpsense {

inline constexpr int kSessionFormatVersion = 1;

struct LabelSpan {
  Seconds start = 0.0;
  Seconds end = 0.0;
  NeedLevelLabel level = NeedLevelLabel::Flow;

  bool operator==(const LabelSpan&) const = default;
};

/// gaze_raw carries GazeObservation, utterance carries text, need_* carry a value.
using Payload = std::variant<GazeObservation, std::string, double>;

struct RecordedMessage {
  StreamId stream = StreamId::GazeRaw;
  Seconds t = 0.0;
  Payload payload;

  bool operator==(const RecordedMessage&) const = default;
};

struct SessionRecord {
  std::string session_id;
  Seconds duration = 0.0;
  std::vector<RecordedMessage> messages;
  std::vector<LabelSpan> labels;

  bool operator==(const SessionRecord&) const = default;
};

/// Streams that have a file payload.
bool is_persistable(StreamId id);

/// Sorts messages and labels into canonical order.
void canonicalize(SessionRecord& record);

/// Throws DataError on any invariant violation: bad id, non-monotone stream,
/// payload out of range, or labels that do not tile [0, duration).
void validate(const SessionRecord& record);

std::string serialize(const SessionRecord& record);
/// Throws ParseError naming `origin` and the offending line.
SessionRecord parse_session(std::string_view text, const std::string& origin = "<session>");

SessionRecord load_session(const std::filesystem::path& path);
void save_session(const SessionRecord& record, const std::filesystem::path& path);
/// Loads every *.session file in `dir`, ordered by file name.
std::vector<SessionRecord> load_session_dir(const std::filesystem::path& dir);

struct SessionHeader {
  std::string session_id;
  Seconds duration = 0.0;
};
using SessionLine = std::variant<SessionHeader, RecordedMessage, LabelSpan>;

/// Parses a single record line. Throws std::invalid_argument or WiringError.
SessionLine parse_session_line(std::string_view line);
std::string format_session_line(const SessionLine& line);

/// Label of the span containing t under half-open [start, end) spans.
/// Throws std::out_of_range unless 0 <= t < duration.
NeedLevelLabel label_at(const SessionRecord& record, Seconds t);
/// 1 iff the label at t is L2 or L3.
int binary_label_at(const SessionRecord& record, Seconds t);
/// Same as label_at, except that t == duration maps to the final span. Used
/// for tick-grid anchors, whose last tick may fall on the session end.
NeedLevelLabel tick_label(const SessionRecord& record, Seconds t);
int binary_tick_label(const SessionRecord& record, Seconds t);

std::vector<Message<GazeObservation>> gaze_messages(const SessionRecord& record);
std::vector<Utterance> utterances(const SessionRecord& record);
std::vector<Message<double>> need_messages(const SessionRecord& record, StreamId stream);
bool has_stream(const SessionRecord& record, StreamId stream);

struct LabeledUtterance {
  Utterance utterance;
  int label = 0;
  std::string session_id;
};

/// One row per utterance, labeled at the utterance's finalization time.
std::vector<LabeledUtterance> export_language_corpus(std::span<const SessionRecord> records);

struct TrainingRow {
  std::vector<double> features;
  int label = 0;
  std::string session_id;
  Seconds anchor_t = 0.0;

  bool operator==(const TrainingRow&) const = default;
};

struct TrainingMatrix {
  std::vector<TrainingRow> rows;
  std::size_t dimension = 0;
  std::string provenance;

  bool operator==(const TrainingMatrix&) const = default;
};

/// The (mutual, confirmatory, language) frames of a DS1 session. Throws
/// DataError if a need stream is missing or the three tick grids differ.
std::vector<FusionFrame> ds1_frames(const SessionRecord& ds1);

/// Sliding-window rows of dimension 3*window over every DS1 session, labeled
/// at each window's newest tick; warm-up ticks produce no rows.
TrainingMatrix export_fusion_matrix(std::span<const SessionRecord> ds1, std::size_t window);

}  // namespace helpsense
