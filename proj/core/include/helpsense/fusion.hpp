#pragma once

// Decision-level fusion: resample the three need streams onto a shared tick
// grid, window the resulting frames, and classify them with a random forest.
// Also the two-stage training flow (DS0 -> language model -> DS1 -> forest)
// and the runtime pipeline shared by training and live execution.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "helpsense/forest.hpp"
#include "helpsense/gaze.hpp"
#include "helpsense/language.hpp"
#include "helpsense/session.hpp"
#include "helpsense/stream.hpp"

namespace helpsense {

struct PipelineConfig {
  double cadence_hz = 10.0;
  std::size_t window = 20;
  GazeConfig gaze;
};

void validate(const PipelineConfig& config);

/// Tick times k/cadence for k = 0 .. floor(duration * cadence).
std::vector<Seconds> tick_grid(Seconds duration, double cadence);

/// Zero-order holds the three need streams (initial 0.0) onto the tick grid
/// and zips them into frames. Frame values are rounded to the need-value
/// file precision, so a frame read back from DS1 is bit-identical.
Stream<FusionFrame>& wire_frames(Pipeline& pipeline, Stream<double>& mutual, Stream<double>& confirmatory,
                                 Stream<double>& language, double cadence);

/// Batch form of wire_frames over recorded need streams; one frame per tick
/// of tick_grid(duration, cadence).
std::vector<FusionFrame> make_frames(std::span<const Message<double>> mutual,
                                     std::span<const Message<double>> confirmatory,
                                     std::span<const Message<double>> language, double cadence, Seconds duration);

/// Sliding windows of `window` frames, flattened oldest first.
std::vector<WindowedFeatureVector> assemble(std::span<const FusionFrame> frames, std::size_t window);

struct Decision {
  FusionFrame frame;
  ForestVote vote;
};

/// The full runtime graph: gaze and language models feeding the frame
/// builder, and (when a forest is supplied) the window and fusion model.
/// Keeps its own copies of the models.
class NeedPipeline {
 public:
  NeedPipeline(const PipelineConfig& config, NaiveBayesModel language_model,
               std::optional<RandomForest> forest = std::nullopt, PipelineClock clock = {});

  void on_frame(std::function<void(const FusionFrame&)> handler);
  void on_decision(std::function<void(const Decision&)> handler);

  void push_gaze(Seconds t, const GazeObservation& observation);
  void push_utterance(Seconds t, std::string text);
  void finish(Seconds end);

  /// Replays the session's gaze and utterance messages in global time order
  /// and finishes at its duration.
  void replay(const SessionRecord& session);

  Pipeline& pipeline() { return *pipeline_; }
  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
  std::unique_ptr<NaiveBayesModel> language_model_;
  std::unique_ptr<RandomForest> forest_;
  std::unique_ptr<Pipeline> pipeline_;
  Stream<GazeObservation>* gaze_ = nullptr;
  Stream<std::string>* utterances_ = nullptr;
  Stream<FusionFrame>* frames_ = nullptr;
  Stream<Decision>* decisions_ = nullptr;
};

/// Language training rows; utterances without tokens are skipped.
std::vector<LabeledFeatures> featurize(std::span<const LabeledUtterance> corpus, bool aggregates);

/// Stage 1a/1b: export the utterance corpus from DS0 and fit the language model.
NaiveBayesModel train_language(std::span<const SessionRecord> ds0, double alpha, bool aggregates);

/// Stage 1c: runs each DS0 session through the gaze and language models and
/// stores the tick-grid need streams, with labels copied, as DS1 sessions.
std::vector<SessionRecord> stage1_materialize(std::span<const SessionRecord> ds0,
                                              const NaiveBayesModel& language_model, const PipelineConfig& config);
SessionRecord materialize_session(const SessionRecord& ds0, const NaiveBayesModel& language_model,
                                  const PipelineConfig& config);

/// Stage 2: window the DS1 streams and fit the forest.
RandomForest stage2_train(std::span<const SessionRecord> ds1, std::size_t window, const ForestConfig& config);

/// Forest decisions for every post-warm-up tick of a DS1 session.
std::vector<Decision> batch_decisions(const SessionRecord& ds1, const RandomForest& forest, std::size_t window);

}  // namespace helpsense
