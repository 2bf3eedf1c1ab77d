#pragma once

// Timestamped-stream dataflow: ordered message streams, originating-time
// joins, zero-order-hold resampling, sliding windows and a single-threaded
// scheduler for deterministic replay.
//
// Streams are not internally synchronized. Each stream has one producer and
// subscribers run synchronously inside emit(), so per-stream delivery is
// serialized in originating-time order.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "helpsense/errors.hpp"
#include "helpsense/types.hpp"

namespace helpsense {

enum class StreamId : std::uint8_t {
  GazeRaw,
  GazeDirection,
  GazeTarget,
  NeedMutual,
  NeedConfirmatory,
  Utterance,
  NeedLanguage,
  FusionFrame,
  NeedFused,
  Label,
};

inline constexpr std::array kAllStreamIds = {
    StreamId::GazeRaw,      StreamId::GazeDirection, StreamId::GazeTarget,
    StreamId::NeedMutual,   StreamId::NeedConfirmatory, StreamId::Utterance,
    StreamId::NeedLanguage, StreamId::FusionFrame,   StreamId::NeedFused,
    StreamId::Label,
};

std::string_view to_string(StreamId id);
std::optional<StreamId> find_stream_id(std::string_view name);
/// Throws WiringError for names outside the fixed stream vocabulary.
StreamId parse_stream_id(std::string_view name);

template <class T>
struct Message {
  Seconds t = 0.0;
  T payload{};

  bool operator==(const Message&) const = default;
};

class StreamBase {
 public:
  explicit StreamBase(std::string name) : name_(std::move(name)) {}
  virtual ~StreamBase() = default;
  StreamBase(const StreamBase&) = delete;
  StreamBase& operator=(const StreamBase&) = delete;

  const std::string& name() const { return name_; }
  std::size_t emitted() const { return emitted_; }
  /// Messages an operator failed to compute.
  std::size_t errors() const { return errors_; }
  /// Messages an operator discarded (filtered, or no join partner).
  std::size_t dropped() const { return dropped_; }
  bool closed() const { return closed_; }
  std::optional<Seconds> last_time() const { return last_time_; }

  void count_error() { ++errors_; }
  void count_drop() { ++dropped_; }

  virtual void close() = 0;

 protected:
  void check_order(Seconds t) const;
  void mark_emitted(Seconds t) {
    last_time_ = t;
    ++emitted_;
  }

  std::string name_;
  std::size_t emitted_ = 0;
  std::size_t errors_ = 0;
  std::size_t dropped_ = 0;
  bool closed_ = false;
  std::optional<Seconds> last_time_;
};

template <class T>
class Stream final : public StreamBase {
 public:
  using value_type = T;
  using MessageHandler = std::function<void(const Message<T>&)>;
  using CloseHandler = std::function<void()>;

  using StreamBase::StreamBase;

  void subscribe(MessageHandler on_message, CloseHandler on_close = {}) {
    subscribers_.push_back({std::move(on_message), std::move(on_close)});
  }

  /// Appends a message. Throws OrderingError unless t is finite, non-negative
  /// and strictly after the previous message on this stream.
  void emit(Seconds t, T payload) {
    check_order(t);
    mark_emitted(t);
    const Message<T> message{t, std::move(payload)};
    for (auto& s : subscribers_) {
      if (s.on_message) s.on_message(message);
    }
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    for (auto& s : subscribers_) {
      if (s.on_close) s.on_close();
    }
  }

 private:
  struct Subscriber {
    MessageHandler on_message;
    CloseHandler on_close;
  };
  std::vector<Subscriber> subscribers_;
};

/// Collects every message of a stream into a vector.
template <class T>
std::shared_ptr<std::vector<Message<T>>> record(Stream<T>& stream) {
  auto sink = std::make_shared<std::vector<Message<T>>>();
  stream.subscribe([sink](const Message<T>& m) { sink->push_back(m); });
  return sink;
}

struct PipelineClock {
  enum class Mode { Live, Replay };

  Mode mode = Mode::Replay;
  /// Replay pacing relative to wall time. Infinity replays as fast as possible.
  double replay_speed = std::numeric_limits<double>::infinity();
};

namespace detail {

template <class R>
struct unwrap_optional {
  using type = R;
  static constexpr bool is_optional = false;
};
template <class R>
struct unwrap_optional<std::optional<R>> {
  using type = R;
  static constexpr bool is_optional = true;
};

}  // namespace detail

/// Owns streams and operators. Operators are attached with the member
/// templates below; each returns the operator's output stream, which stays
/// valid for the pipeline's lifetime.
class Pipeline {
 public:
  explicit Pipeline(PipelineClock clock = {});
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const PipelineClock& clock() const { return clock_; }

  /// Creates the named stream. Throws WiringError if it already exists.
  template <class T>
  Stream<T>& create(StreamId id) {
    auto& slot = named_[static_cast<std::size_t>(id)];
    if (slot) throw WiringError("stream " + std::string(to_string(id)) + " already wired");
    auto stream = std::make_unique<Stream<T>>(std::string(to_string(id)));
    Stream<T>& ref = *stream;
    slot = stream.get();
    streams_.push_back(std::move(stream));
    return ref;
  }

  template <class T>
  Stream<T>& create(std::string_view name) {
    return create<T>(parse_stream_id(name));
  }

  /// Looks up a named stream. Throws WiringError if absent or of another type.
  template <class T>
  Stream<T>& get(StreamId id) const {
    StreamBase* base = named_[static_cast<std::size_t>(id)];
    if (!base) throw WiringError("stream " + std::string(to_string(id)) + " is not wired");
    auto* typed = dynamic_cast<Stream<T>*>(base);
    if (!typed) throw WiringError("stream " + std::string(to_string(id)) + " has another payload type");
    return *typed;
  }

  bool has(StreamId id) const { return named_[static_cast<std::size_t>(id)] != nullptr; }

  /// An unnamed intermediate stream.
  template <class T>
  Stream<T>& internal(std::string label) {
    auto stream = std::make_unique<Stream<T>>(std::move(label));
    Stream<T>& ref = *stream;
    streams_.push_back(std::move(stream));
    return ref;
  }

  /// Applies `f` to every payload. `f` may return std::optional; an empty
  /// result drops the message (counted in dropped()). An exception from `f`
  /// drops the message and is counted in errors().
  template <class T, class F>
  auto& map(Stream<T>& in, F f, std::optional<StreamId> out = {}) {
    return process(
        in, [f = std::move(f)](const Message<T>& m) mutable { return f(m.payload); }, out);
  }

  /// Like map, but `f` sees the whole message (time and payload). Intended
  /// for per-stream stateful operators.
  template <class T, class F>
  auto& process(Stream<T>& in, F f, std::optional<StreamId> out = {}) {
    using R = std::invoke_result_t<F&, const Message<T>&>;
    using Unwrap = detail::unwrap_optional<R>;
    using U = typename Unwrap::type;
    Stream<U>& output = out ? create<U>(*out) : internal<U>(in.name() + ">map");
    mark_produced(output);
    in.subscribe(
        [&output, f = std::move(f)](const Message<T>& m) mutable {
          std::optional<U> result;
          try {
            if constexpr (Unwrap::is_optional) {
              result = f(m);
              if (!result) {
                output.count_drop();
                return;
              }
            } else {
              result.emplace(f(m));
            }
          } catch (const std::exception&) {
            output.count_error();
            return;
          }
          output.emit(m.t, std::move(*result));
        },
        [&output] { output.close(); });
    return output;
  }

  /// Pairs each primary message with the secondary message nearest in
  /// originating time, within ±tolerance. Ties go to the earlier secondary.
  /// Output carries the primary's time; unmatched primaries are dropped and
  /// counted. A primary is resolved once a secondary at or after its time has
  /// arrived, or the secondary stream closes.
  template <class A, class B>
  Stream<std::pair<A, B>>& join_nearest(Stream<A>& primary, Stream<B>& secondary,
                                        Seconds tolerance, std::optional<StreamId> out = {});

  /// Emits at ticks k/cadence the latest input payload with time <= tick, or
  /// `initial` before the first input. Ticks fire as the pipeline clock
  /// advances, so every input at or before a tick is seen first.
  template <class T>
  Stream<T>& sample_hold(Stream<T>& in, double cadence, T initial,
                         std::optional<StreamId> out = {});

  /// After `size` inputs, emits the last `size` payloads (oldest first) at
  /// the newest message's time. Nothing is emitted during warm-up.
  template <class T>
  Stream<std::vector<T>>& sliding_window(Stream<T>& in, std::size_t size,
                                         std::optional<StreamId> out = {});

  /// Delivers an external message into a source stream. Ticks strictly before
  /// `t` fire first. In replay mode, times must be globally non-decreasing.
  template <class T>
  void inject(Stream<T>& source, Seconds t, T payload) {
    if (clock_.mode == PipelineClock::Mode::Replay && watermark_ && t < *watermark_) {
      throw OrderingError("replay out of global order on stream " + source.name());
    }
    advance_before(t);
    watermark_ = watermark_ ? std::max(*watermark_, t) : t;
    source.emit(t, std::move(payload));
  }

  /// Fires every pending tick with time < t.
  void advance_before(Seconds t) { advance(t, false); }
  /// Fires every pending tick with time <= t.
  void advance_through(Seconds t) { advance(t, true); }

  /// End of input: fires ticks through `end`, then closes all streams that
  /// have no producing operator; closure propagates downstream.
  void finish(Seconds end);

  std::optional<Seconds> watermark() const { return watermark_; }

 private:
  struct TickSource {
    double cadence;
    std::uint64_t next = 0;
    std::function<void(Seconds)> fire;
    StreamBase* output;

    Seconds next_time() const { return static_cast<double>(next) / cadence; }
  };

  void mark_produced(StreamBase& s) { produced_.push_back(&s); }
  void advance(Seconds limit, bool inclusive);

  PipelineClock clock_;
  std::vector<std::unique_ptr<StreamBase>> streams_;
  std::array<StreamBase*, kAllStreamIds.size()> named_{};
  std::vector<StreamBase*> produced_;
  std::vector<TickSource> tick_sources_;
  std::optional<Seconds> watermark_;
};

template <class A, class B>
Stream<std::pair<A, B>>& Pipeline::join_nearest(Stream<A>& primary, Stream<B>& secondary,
                                                Seconds tolerance, std::optional<StreamId> out) {
  if (!(tolerance >= 0.0)) throw std::invalid_argument("join tolerance must be >= 0");
  using Pair = std::pair<A, B>;
  Stream<Pair>& output =
      out ? create<Pair>(*out) : internal<Pair>(primary.name() + "*" + secondary.name());
  mark_produced(output);

  struct State {
    std::deque<Message<A>> pending;
    std::deque<Message<B>> secondaries;
    bool primary_closed = false;
    bool secondary_closed = false;
    bool output_closed = false;
  };
  auto state = std::make_shared<State>();

  auto resolve = [state, &output, tolerance] {
    auto& s = *state;
    while (!s.pending.empty()) {
      const Message<A>& p = s.pending.front();
      const bool ready =
          s.secondary_closed || (!s.secondaries.empty() && s.secondaries.back().t >= p.t);
      if (!ready) break;
      auto after = std::lower_bound(s.secondaries.begin(), s.secondaries.end(), p.t,
                                    [](const Message<B>& m, Seconds t) { return m.t < t; });
      auto best = s.secondaries.end();
      Seconds best_distance = std::numeric_limits<Seconds>::infinity();
      if (after != s.secondaries.begin()) {
        best = std::prev(after);
        best_distance = p.t - best->t;
      }
      if (after != s.secondaries.end() && after->t - p.t < best_distance) {
        best = after;
        best_distance = after->t - p.t;
      }
      if (best != s.secondaries.end() && best_distance <= tolerance) {
        output.emit(p.t, Pair{p.payload, best->payload});
      } else {
        output.count_drop();
      }
      // Later primaries are not earlier than p, so only the last secondary
      // before p and everything after it can still be a nearest partner.
      if (after != s.secondaries.begin()) {
        s.secondaries.erase(s.secondaries.begin(), std::prev(after));
      }
      s.pending.pop_front();
    }
    if (s.primary_closed && s.secondary_closed && s.pending.empty() && !s.output_closed) {
      s.output_closed = true;
      output.close();
    }
  };

  primary.subscribe(
      [state, resolve](const Message<A>& m) {
        state->pending.push_back(m);
        resolve();
      },
      [state, resolve] {
        state->primary_closed = true;
        resolve();
      });
  secondary.subscribe(
      [state, resolve](const Message<B>& m) {
        state->secondaries.push_back(m);
        resolve();
      },
      [state, resolve] {
        state->secondary_closed = true;
        resolve();
      });
  return output;
}

template <class T>
Stream<T>& Pipeline::sample_hold(Stream<T>& in, double cadence, T initial,
                                 std::optional<StreamId> out) {
  if (!(cadence > 0.0) || !std::isfinite(cadence)) {
    throw std::invalid_argument("sample_hold cadence must be > 0");
  }
  Stream<T>& output = out ? create<T>(*out) : internal<T>(in.name() + "@hold");
  mark_produced(output);
  auto held = std::make_shared<T>(std::move(initial));
  in.subscribe([held](const Message<T>& m) { *held = m.payload; });
  tick_sources_.push_back(
      TickSource{cadence, 0, [held, &output](Seconds tick) { output.emit(tick, *held); }, &output});
  return output;
}

template <class T>
Stream<std::vector<T>>& Pipeline::sliding_window(Stream<T>& in, std::size_t size,
                                                 std::optional<StreamId> out) {
  if (size < 1) throw std::invalid_argument("sliding window size must be >= 1");
  using Window = std::vector<T>;
  Stream<Window>& output = out ? create<Window>(*out) : internal<Window>(in.name() + "[w]");
  mark_produced(output);
  auto buffer = std::make_shared<std::deque<T>>();
  in.subscribe(
      [buffer, size, &output](const Message<T>& m) {
        buffer->push_back(m.payload);
        if (buffer->size() > size) buffer->pop_front();
        if (buffer->size() == size) output.emit(m.t, Window(buffer->begin(), buffer->end()));
      },
      [&output] { output.close(); });
  return output;
}

/// Delivers heterogeneous recorded messages into a pipeline in global
/// originating-time order. Equal times keep stream rank, then insertion order.
class ReplayScheduler {
 public:
  template <class T>
  void add(Stream<T>& source, Seconds t, T payload, int rank = 0) {
    events_.push_back(Event{t, rank, events_.size(),
                            [&source, t, p = std::move(payload)](Pipeline& pipeline) mutable {
                              pipeline.inject(source, t, std::move(p));
                            }});
  }

  /// Replays every event, then finishes the pipeline at `end`. Paced against
  /// the wall clock when the pipeline's replay speed is finite.
  void run(Pipeline& pipeline, Seconds end);

  std::size_t size() const { return events_.size(); }

 private:
  struct Event {
    Seconds t;
    int rank;
    std::size_t seq;
    std::function<void(Pipeline&)> deliver;
  };
  std::vector<Event> events_;
};

}  // namespace helpsense
