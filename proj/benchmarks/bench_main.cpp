#include <benchmark/benchmark.h>

#include "helpsense/fusion.hpp"
#include "helpsense/scenario.hpp"

using namespace helpsense;

namespace {

const std::vector<SessionRecord>& corpus() {
  static const std::vector<SessionRecord> sessions = [] {
    CorpusOptions options;
    options.sessions = 8;
    options.seed = 5;
    std::vector<SessionRecord> out;
    for (const auto& s : generate_corpus(options)) out.push_back(simulate(s));
    return out;
  }();
  return sessions;
}

const NaiveBayesModel& language_model() {
  static const NaiveBayesModel model = train_language(corpus(), 1.0, true);
  return model;
}

const std::vector<SessionRecord>& ds1() {
  static const std::vector<SessionRecord> sessions = stage1_materialize(corpus(), language_model(), PipelineConfig{});
  return sessions;
}

void BM_ForestTrain(benchmark::State& state) {
  const auto matrix = export_fusion_matrix(ds1(), 20);
  ForestConfig config;
  config.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(RandomForest::train(matrix, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(matrix.rows.size()));
}
BENCHMARK(BM_ForestTrain)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LanguagePredict(benchmark::State& state) {
  const auto& model = language_model();
  const std::vector<std::string> phrases{"where is the red block", "okay this is going well", "can you help me please",
                                         "hmm i don't know what to do next"};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.need(phrases[i++ % phrases.size()]));
}
BENCHMARK(BM_LanguagePredict);

void BM_PipelineReplay(benchmark::State& state) {
  ForestConfig config;
  config.n_trees = 50;
  const auto forest = stage2_train(ds1(), 20, config);
  const auto& session = corpus().front();
  std::size_t decisions = 0;
  for (auto _ : state) {
    NeedPipeline pipeline(PipelineConfig{}, language_model(), forest);
    pipeline.on_decision([&decisions](const Decision&) { ++decisions; });
    pipeline.replay(session);
  }
  benchmark::DoNotOptimize(decisions);
  state.counters["session_s"] = session.duration;
}
BENCHMARK(BM_PipelineReplay)->Unit(benchmark::kMillisecond);

void BM_WindowAssembly(benchmark::State& state) {
  const auto frames = ds1_frames(ds1().front());
  for (auto _ : state) benchmark::DoNotOptimize(assemble(frames, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.size()));
}
BENCHMARK(BM_WindowAssembly)->Arg(20)->Arg(60);

}  // namespace
BENCHMARK_MAIN();
