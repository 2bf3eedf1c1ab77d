#include "helpsense/fusion.hpp"

#include <cmath>

#include "helpsense/wire.hpp"

namespace helpsense {

namespace {

int rank(StreamId id) { return static_cast<int>(id); }

}  // namespace

void validate(const PipelineConfig& config) {
  if (!(config.cadence_hz > 0.0) || !(config.cadence_hz <= 1000.0)) {
    throw std::invalid_argument("cadence must be in (0, 1000] Hz");
  }
  if (config.window < 1) throw std::invalid_argument("window must be >= 1");
  validate(config.gaze);
}

std::vector<Seconds> tick_grid(Seconds duration, double cadence) {
  std::vector<Seconds> ticks;
  for (std::uint64_t k = 0;; ++k) {
    const Seconds t = static_cast<double>(k) / cadence;
    if (t > duration) break;
    ticks.push_back(t);
  }
  return ticks;
}

Stream<FusionFrame>& wire_frames(Pipeline& pipeline, Stream<double>& mutual, Stream<double>& confirmatory,
                                 Stream<double>& language, double cadence) {
  auto& held_mutual = pipeline.sample_hold(mutual, cadence, 0.0);
  auto& held_confirmatory = pipeline.sample_hold(confirmatory, cadence, 0.0);
  auto& held_language = pipeline.sample_hold(language, cadence, 0.0);
  auto& gaze_pair = pipeline.join_nearest(held_mutual, held_confirmatory, 0.0);
  auto& triple = pipeline.join_nearest(gaze_pair, held_language, 0.0);
  return pipeline.process(
      triple,
      [](const Message<std::pair<std::pair<double, double>, double>>& m) {
        return FusionFrame{m.t, wire::quantize_value(m.payload.first.first),
                           wire::quantize_value(m.payload.first.second), wire::quantize_value(m.payload.second)};
      },
      StreamId::FusionFrame);
}

std::vector<FusionFrame> make_frames(std::span<const Message<double>> mutual,
                                     std::span<const Message<double>> confirmatory,
                                     std::span<const Message<double>> language, double cadence,
                                     Seconds duration) {
  Pipeline pipeline;
  auto& m = pipeline.create<double>(StreamId::NeedMutual);
  auto& c = pipeline.create<double>(StreamId::NeedConfirmatory);
  auto& l = pipeline.create<double>(StreamId::NeedLanguage);
  auto frames = record(wire_frames(pipeline, m, c, l, cadence));
  ReplayScheduler scheduler;
  for (const auto& msg : mutual) scheduler.add(m, msg.t, msg.payload, rank(StreamId::NeedMutual));
  for (const auto& msg : confirmatory) scheduler.add(c, msg.t, msg.payload, rank(StreamId::NeedConfirmatory));
  for (const auto& msg : language) scheduler.add(l, msg.t, msg.payload, rank(StreamId::NeedLanguage));
  scheduler.run(pipeline, duration);
  std::vector<FusionFrame> out;
  out.reserve(frames->size());
  for (const auto& f : *frames) out.push_back(f.payload);
  return out;
}

std::vector<WindowedFeatureVector> assemble(std::span<const FusionFrame> frames, std::size_t window) {
  Pipeline pipeline;
  auto& source = pipeline.create<FusionFrame>(StreamId::FusionFrame);
  std::vector<WindowedFeatureVector> out;
  pipeline.sliding_window(source, window).subscribe(
      [&out](const Message<std::vector<FusionFrame>>& m) { out.push_back(flatten_window(m.payload)); });
  for (const auto& f : frames) source.emit(f.t, f);
  source.close();
  return out;
}

NeedPipeline::NeedPipeline(const PipelineConfig& config, NaiveBayesModel language_model,
                           std::optional<RandomForest> forest, PipelineClock clock)
    : config_(config),
      language_model_(std::make_unique<NaiveBayesModel>(std::move(language_model))),
      pipeline_(std::make_unique<Pipeline>(clock)) {
  validate(config_);
  if (forest) {
    if (forest->dimension() != kValuesPerFrame * config_.window) {
      throw ModelError("forest expects dimension " + std::to_string(forest->dimension()) + " but window " +
                       std::to_string(config_.window) + " yields " +
                       std::to_string(kValuesPerFrame * config_.window));
    }
    forest_ = std::make_unique<RandomForest>(std::move(*forest));
  }
  auto& p = *pipeline_;
  gaze_ = &p.create<GazeObservation>(StreamId::GazeRaw);
  utterances_ = &p.create<std::string>(StreamId::Utterance);
  auto gaze = wire_gaze(p, *gaze_, config_.gaze);
  auto& language = wire_language(p, *utterances_, *language_model_);
  frames_ = &wire_frames(p, gaze.mutual, gaze.confirmatory, language, config_.cadence_hz);
  if (forest_) {
    auto& windows = p.sliding_window(*frames_, config_.window);
    const RandomForest* model = forest_.get();
    decisions_ = &p.map(windows, [model](const std::vector<FusionFrame>& w) {
      const auto features = flatten_window(w);
      return Decision{w.back(), model->predict(features.values)};
    });
    p.map(*decisions_, [](const Decision& d) { return d.vote.score; }, StreamId::NeedFused);
  }
}

void NeedPipeline::on_frame(std::function<void(const FusionFrame&)> handler) {
  frames_->subscribe([h = std::move(handler)](const Message<FusionFrame>& m) { h(m.payload); });
}

void NeedPipeline::on_decision(std::function<void(const Decision&)> handler) {
  if (!decisions_) throw WiringError("pipeline has no fusion model");
  decisions_->subscribe([h = std::move(handler)](const Message<Decision>& m) { h(m.payload); });
}

void NeedPipeline::push_gaze(Seconds t, const GazeObservation& observation) { pipeline_->inject(*gaze_, t, observation); }

void NeedPipeline::push_utterance(Seconds t, std::string text) {
  pipeline_->inject(*utterances_, t, std::move(text));
}

void NeedPipeline::finish(Seconds end) { pipeline_->finish(end); }

void NeedPipeline::replay(const SessionRecord& session) {
  ReplayScheduler scheduler;
  for (const auto& m : session.messages) {
    if (m.stream == StreamId::GazeRaw) {
      scheduler.add(*gaze_, m.t, std::get<GazeObservation>(m.payload), rank(m.stream));
    } else if (m.stream == StreamId::Utterance) {
      scheduler.add(*utterances_, m.t, std::get<std::string>(m.payload), rank(m.stream));
    }
  }
  scheduler.run(*pipeline_, session.duration);
}

std::vector<LabeledFeatures> featurize(std::span<const LabeledUtterance> corpus, bool aggregates) {
  std::vector<LabeledFeatures> out;
  out.reserve(corpus.size());
  for (const auto& row : corpus) {
    const auto tokens = tokenize(row.utterance.text);
    if (tokens.empty()) continue;
    out.push_back({extract_features(tokens, aggregates), row.label});
  }
  return out;
}

NaiveBayesModel train_language(std::span<const SessionRecord> ds0, double alpha, bool aggregates) {
  const auto corpus = export_language_corpus(ds0);
  const auto rows = featurize(corpus, aggregates);
  return NaiveBayesModel::train(rows, alpha, aggregates);
}

SessionRecord materialize_session(const SessionRecord& ds0, const NaiveBayesModel& language_model,
                                  const PipelineConfig& config) {
  NeedPipeline runtime(config, language_model);
  SessionRecord ds1;
  ds1.session_id = ds0.session_id;
  ds1.duration = ds0.duration;
  ds1.labels = ds0.labels;
  runtime.on_frame([&ds1](const FusionFrame& f) {
    const Seconds t = wire::quantize_time(f.t);
    ds1.messages.push_back({StreamId::NeedMutual, t, f.mutual});
    ds1.messages.push_back({StreamId::NeedConfirmatory, t, f.confirmatory});
    ds1.messages.push_back({StreamId::NeedLanguage, t, f.language});
  });
  runtime.replay(ds0);
  canonicalize(ds1);
  return ds1;
}

std::vector<SessionRecord> stage1_materialize(std::span<const SessionRecord> ds0,
                                              const NaiveBayesModel& language_model,
                                              const PipelineConfig& config) {
  std::vector<SessionRecord> ds1;
  ds1.reserve(ds0.size());
  for (const auto& session : ds0) ds1.push_back(materialize_session(session, language_model, config));
  return ds1;
}

RandomForest stage2_train(std::span<const SessionRecord> ds1, std::size_t window, const ForestConfig& config) {
  if (ds1.empty()) throw ModelError("stage 2 needs at least one DS1 session");
  const auto matrix = export_fusion_matrix(ds1, window);
  if (matrix.rows.empty()) throw ModelError("DS1 sessions are all shorter than the window");
  return RandomForest::train(matrix, config);
}

std::vector<Decision> batch_decisions(const SessionRecord& ds1, const RandomForest& forest, std::size_t window) {
  const auto frames = ds1_frames(ds1);
  const auto vectors = assemble(frames, window);
  std::vector<Decision> out;
  out.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out.push_back({frames[i + window - 1], forest.predict(vectors[i].values)});
  }
  return out;
}

}  // namespace helpsense
