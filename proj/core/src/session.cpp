#include "helpsense/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "helpsense/wire.hpp"

namespace helpsense {

namespace {

bool valid_session_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

bool blank(std::string_view text) {
  return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

bool is_need_stream(StreamId id) {
  return id == StreamId::NeedMutual || id == StreamId::NeedConfirmatory ||
         id == StreamId::NeedLanguage || id == StreamId::NeedFused;
}

void check_payload(const RecordedMessage& m) {
  const auto name = std::string(to_string(m.stream));
  if (!is_persistable(m.stream)) throw std::invalid_argument("stream " + name + " has no file payload");
  if (m.stream == StreamId::GazeRaw) {
    const auto* g = std::get_if<GazeObservation>(&m.payload);
    if (!g) throw std::invalid_argument("stream " + name + ": payload is not a gaze observation");
    if (!std::isfinite(g->yaw) || !std::isfinite(g->pitch)) {
      throw std::invalid_argument("stream " + name + ": non-finite angle");
    }
    if (!(g->confidence >= 0.0 && g->confidence <= 1.0)) {
      throw std::invalid_argument("stream " + name + ": confidence outside [0,1]");
    }
  } else if (m.stream == StreamId::Utterance) {
    const auto* text = std::get_if<std::string>(&m.payload);
    if (!text) throw std::invalid_argument("stream " + name + ": payload is not text");
    if (blank(*text)) throw std::invalid_argument("stream " + name + ": empty utterance");
  } else {
    const auto* v = std::get_if<double>(&m.payload);
    if (!v) throw std::invalid_argument("stream " + name + ": payload is not a value");
    if (!(*v >= 0.0 && *v <= 1.0)) throw std::invalid_argument("stream " + name + ": value outside [0,1]");
  }
}

// Labels must tile [0, duration) exactly. `line_of(i)` names the source line
// of label i for error reporting (0 when unknown).
template <class LineOf>
void check_labels(const std::vector<LabelSpan>& labels, Seconds duration, const std::string& origin,
                  LineOf line_of) {
  auto fail = [&](std::size_t i, const std::string& what) -> void {
    throw ParseError(origin, line_of(i), what);
  };
  if (labels.empty()) fail(0, "no labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& span = labels[i];
    if (!(span.start < span.end)) fail(i, "label start " + wire::format_short(span.start) + " not before end");
    if (span.start < 0.0 || span.end > duration) {
      fail(i, "label span [" + wire::format_short(span.start) + ", " + wire::format_short(span.end) +
                  ") outside session");
    }
    if (i == 0) {
      if (span.start != 0.0) fail(i, "label gap at 0.0");
      continue;
    }
    const auto& prev = labels[i - 1];
    if (span.start < prev.end) fail(i, "label overlap at " + wire::format_short(span.start));
    if (span.start > prev.end) fail(i, "label gap at " + wire::format_short(prev.end));
  }
  if (labels.back().end != duration) {
    fail(labels.size() - 1, "label gap at " + wire::format_short(labels.back().end));
  }
}

int stream_rank(StreamId id) { return static_cast<int>(id); }

}  // namespace

bool is_persistable(StreamId id) {
  return id == StreamId::GazeRaw || id == StreamId::Utterance || is_need_stream(id);
}

void canonicalize(SessionRecord& record) {
  std::stable_sort(record.messages.begin(), record.messages.end(),
                   [](const RecordedMessage& a, const RecordedMessage& b) {
                     if (a.t != b.t) return a.t < b.t;
                     return stream_rank(a.stream) < stream_rank(b.stream);
                   });
  std::stable_sort(record.labels.begin(), record.labels.end(),
                   [](const LabelSpan& a, const LabelSpan& b) { return a.start < b.start; });
}

void validate(const SessionRecord& record) {
  const std::string origin = "session " + record.session_id;
  if (!valid_session_id(record.session_id)) throw DataError("invalid session id '" + record.session_id + "'");
  if (!(record.duration > 0.0) || !std::isfinite(record.duration)) throw DataError(origin + ": duration must be > 0");
  std::map<StreamId, Seconds> last;
  for (const auto& m : record.messages) {
    try {
      check_payload(m);
    } catch (const std::invalid_argument& e) {
      throw DataError(origin + ": " + e.what());
    }
    if (!std::isfinite(m.t) || m.t < 0.0) {
      throw DataError(origin + ": stream " + std::string(to_string(m.stream)) + " has invalid time");
    }
    auto it = last.find(m.stream);
    if (it != last.end() && !(m.t > it->second)) {
      throw DataError(origin + ": stream " + std::string(to_string(m.stream)) + " non-monotone time " +
                      wire::format_short(m.t));
    }
    last[m.stream] = m.t;
  }
  auto labels = record.labels;
  std::stable_sort(labels.begin(), labels.end(),
                   [](const LabelSpan& a, const LabelSpan& b) { return a.start < b.start; });
  try {
    check_labels(labels, record.duration, origin, [](std::size_t) { return std::size_t{0}; });
  } catch (const ParseError& e) {
    throw DataError(e.what());
  }
}

SessionLine parse_session_line(std::string_view line) {
  wire::FieldSet fields(wire::split_fields(line));
  if (fields.has("format_version")) {
    fields.expect_only({"format_version", "session_id", "duration"});
    if (wire::parse_int(fields.get("format_version")) != kSessionFormatVersion) {
      throw std::invalid_argument("unsupported format_version " + fields.get("format_version"));
    }
    SessionHeader header{fields.get("session_id"), fields.number("duration")};
    if (!valid_session_id(header.session_id)) {
      throw std::invalid_argument("invalid session id '" + header.session_id + "'");
    }
    if (!(header.duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    return header;
  }
  const StreamId id = parse_stream_id(fields.get("stream"));
  if (id == StreamId::Label) {
    fields.expect_only({"stream", "start", "end", "level"});
    auto level = parse_need_level(fields.get("level"));
    if (!level) throw std::invalid_argument("unknown need level '" + fields.get("level") + "'");
    return LabelSpan{fields.number("start"), fields.number("end"), *level};
  }
  RecordedMessage m;
  m.stream = id;
  switch (id) {
    case StreamId::GazeRaw:
      fields.expect_only({"stream", "t", "yaw", "pitch", "conf"});
      m.payload = GazeObservation{fields.number("yaw"), fields.number("pitch"), fields.number("conf")};
      break;
    case StreamId::Utterance:
      fields.expect_only({"stream", "t", "text"});
      m.payload = fields.get("text");
      break;
    default:
      if (!is_need_stream(id)) {
        throw std::invalid_argument("stream " + std::string(to_string(id)) + " has no file payload");
      }
      fields.expect_only({"stream", "t", "v"});
      m.payload = fields.number("v");
  }
  m.t = fields.number("t");
  check_payload(m);
  return m;
}

std::string format_session_line(const SessionLine& line) {
  using wire::format_fixed;
  using wire::kTimeDecimals;
  using wire::kValueDecimals;
  if (const auto* h = std::get_if<SessionHeader>(&line)) {
    return "format_version=" + std::to_string(kSessionFormatVersion) + " session_id=" + h->session_id +
           " duration=" + format_fixed(h->duration, kTimeDecimals);
  }
  if (const auto* l = std::get_if<LabelSpan>(&line)) {
    return "stream=label start=" + format_fixed(l->start, kTimeDecimals) +
           " end=" + format_fixed(l->end, kTimeDecimals) + " level=" + std::string(to_string(l->level));
  }
  const auto& m = std::get<RecordedMessage>(line);
  std::string out = "stream=" + std::string(to_string(m.stream)) + " t=" + format_fixed(m.t, kTimeDecimals);
  if (const auto* g = std::get_if<GazeObservation>(&m.payload)) {
    out += " yaw=" + format_fixed(g->yaw, kValueDecimals) + " pitch=" + format_fixed(g->pitch, kValueDecimals) +
           " conf=" + format_fixed(g->confidence, kValueDecimals);
  } else if (const auto* text = std::get_if<std::string>(&m.payload)) {
    out += " text=" + wire::quote(*text);
  } else {
    out += " v=" + format_fixed(std::get<double>(m.payload), kValueDecimals);
  }
  return out;
}

std::string serialize(const SessionRecord& record) {
  SessionRecord canonical = record;
  canonicalize(canonical);
  std::string out = format_session_line(SessionHeader{canonical.session_id, canonical.duration});
  out += '\n';
  for (const auto& span : canonical.labels) {
    out += format_session_line(span);
    out += '\n';
  }
  for (const auto& m : canonical.messages) {
    out += format_session_line(m);
    out += '\n';
  }
  return out;
}

SessionRecord parse_session(std::string_view text, const std::string& origin) {
  SessionRecord record;
  bool have_header = false;
  std::vector<std::size_t> label_lines;
  std::map<StreamId, Seconds> last;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (blank(line) || line.front() == '#') continue;
    SessionLine parsed;
    try {
      parsed = parse_session_line(line);
    } catch (const std::exception& e) {
      throw ParseError(origin, line_no, e.what());
    }
    if (auto* header = std::get_if<SessionHeader>(&parsed)) {
      if (have_header) throw ParseError(origin, line_no, "duplicate header");
      record.session_id = header->session_id;
      record.duration = header->duration;
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(origin, line_no, "first record must be the header");
    if (auto* span = std::get_if<LabelSpan>(&parsed)) {
      record.labels.push_back(*span);
      label_lines.push_back(line_no);
      continue;
    }
    auto& m = std::get<RecordedMessage>(parsed);
    auto it = last.find(m.stream);
    if (it != last.end() && !(m.t > it->second)) {
      throw ParseError(origin, line_no,
                       "stream " + std::string(to_string(m.stream)) + ": non-monotone time " +
                           wire::format_short(m.t) + " after " + wire::format_short(it->second));
    }
    last[m.stream] = m.t;
    record.messages.push_back(std::move(m));
  }
  if (!have_header) throw ParseError(origin, 0, "missing header");

  std::vector<std::size_t> order(record.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return record.labels[a].start < record.labels[b].start;
  });
  std::vector<LabelSpan> sorted;
  std::vector<std::size_t> sorted_lines;
  for (auto i : order) {
    sorted.push_back(record.labels[i]);
    sorted_lines.push_back(label_lines[i]);
  }
  check_labels(sorted, record.duration, origin,
               [&](std::size_t i) { return i < sorted_lines.size() ? sorted_lines[i] : std::size_t{0}; });
  record.labels = std::move(sorted);
  return record;
}

SessionRecord load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_session(buffer.str(), path.string());
}

void save_session(const SessionRecord& record, const std::filesystem::path& path) {
  validate(record);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize(record);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<SessionRecord> load_session_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".session") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SessionRecord> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_session(f));
  return out;
}

NeedLevelLabel label_at(const SessionRecord& record, Seconds t) {
  if (!(t >= 0.0 && t < record.duration)) {
    throw std::out_of_range("time " + wire::format_short(t) + " outside session " + record.session_id);
  }
  auto it = std::upper_bound(record.labels.begin(), record.labels.end(), t,
                             [](Seconds value, const LabelSpan& s) { return value < s.start; });
  if (it == record.labels.begin()) throw std::out_of_range("no label covers " + wire::format_short(t));
  --it;
  if (!(t < it->end)) throw std::out_of_range("no label covers " + wire::format_short(t));
  return it->level;
}

int binary_label_at(const SessionRecord& record, Seconds t) { return is_help(label_at(record, t)) ? 1 : 0; }

NeedLevelLabel tick_label(const SessionRecord& record, Seconds t) {
  if (t == record.duration && !record.labels.empty()) return record.labels.back().level;
  return label_at(record, t);
}

int binary_tick_label(const SessionRecord& record, Seconds t) { return is_help(tick_label(record, t)) ? 1 : 0; }

std::vector<Message<GazeObservation>> gaze_messages(const SessionRecord& record) {
  std::vector<Message<GazeObservation>> out;
  for (const auto& m : record.messages) {
    if (m.stream == StreamId::GazeRaw) out.push_back({m.t, std::get<GazeObservation>(m.payload)});
  }
  return out;
}

std::vector<Utterance> utterances(const SessionRecord& record) {
  std::vector<Utterance> out;
  for (const auto& m : record.messages) {
    if (m.stream == StreamId::Utterance) out.push_back({std::get<std::string>(m.payload), m.t});
  }
  return out;
}

std::vector<Message<double>> need_messages(const SessionRecord& record, StreamId stream) {
  std::vector<Message<double>> out;
  for (const auto& m : record.messages) {
    if (m.stream == stream) out.push_back({m.t, std::get<double>(m.payload)});
  }
  return out;
}

bool has_stream(const SessionRecord& record, StreamId stream) {
  return std::any_of(record.messages.begin(), record.messages.end(),
                     [stream](const RecordedMessage& m) { return m.stream == stream; });
}

std::vector<LabeledUtterance> export_language_corpus(std::span<const SessionRecord> records) {
  std::vector<LabeledUtterance> corpus;
  for (const auto& record : records) {
    for (auto& u : utterances(record)) {
      const int label = binary_tick_label(record, u.t);
      corpus.push_back({std::move(u), label, record.session_id});
    }
  }
  return corpus;
}

std::vector<FusionFrame> ds1_frames(const SessionRecord& ds1) {
  const std::string origin = "session " + ds1.session_id;
  const StreamId ids[] = {StreamId::NeedMutual, StreamId::NeedConfirmatory, StreamId::NeedLanguage};
  std::vector<Message<double>> streams[3];
  for (int i = 0; i < 3; ++i) {
    streams[i] = need_messages(ds1, ids[i]);
    if (streams[i].empty()) throw DataError(origin + ": missing stream " + std::string(to_string(ids[i])));
  }
  if (streams[0].size() != streams[1].size() || streams[0].size() != streams[2].size()) {
    throw DataError(origin + ": need streams are not on a common tick grid");
  }
  std::vector<FusionFrame> frames;
  frames.reserve(streams[0].size());
  for (std::size_t k = 0; k < streams[0].size(); ++k) {
    const Seconds t = streams[0][k].t;
    if (streams[1][k].t != t || streams[2][k].t != t) {
      throw DataError(origin + ": need streams are not on a common tick grid at " + wire::format_short(t));
    }
    frames.push_back({t, streams[0][k].payload, streams[1][k].payload, streams[2][k].payload});
  }
  return frames;
}

TrainingMatrix export_fusion_matrix(std::span<const SessionRecord> ds1, std::size_t window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  TrainingMatrix matrix;
  matrix.dimension = kValuesPerFrame * window;
  matrix.provenance = "ds1 sessions=" + std::to_string(ds1.size()) + " window=" + std::to_string(window);
  for (const auto& record : ds1) {
    const auto frames = ds1_frames(record);
    Pipeline pipeline;
    auto& source = pipeline.internal<FusionFrame>("frames");
    auto& windows = pipeline.sliding_window(source, window);
    windows.subscribe([&](const Message<std::vector<FusionFrame>>& m) {
      auto vec = flatten_window(m.payload);
      matrix.rows.push_back({std::move(vec.values), binary_tick_label(record, m.t), record.session_id, m.t});
    });
    for (const auto& f : frames) source.emit(f.t, f);
    source.close();
  }
  return matrix;
}

}  // namespace helpsense
