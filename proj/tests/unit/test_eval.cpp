#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "helpsense/eval.hpp"
#include "helpsense/scenario.hpp"
#include "helpsense/wire.hpp"

using namespace helpsense;
using helpsense::testing::labeled_session;

namespace {

std::vector<TickPrediction> constant_predictions(const SessionRecord& r, int label, double cadence = 10.0) {
  std::vector<TickPrediction> out;
  for (auto t : tick_grid(r.duration, cadence)) out.push_back({t, label});
  return out;
}

std::vector<TickPrediction> truth(const SessionRecord& r, double cadence = 10.0) {
  std::vector<TickPrediction> out;
  for (auto t : tick_grid(r.duration, cadence)) out.push_back({t, binary_tick_label(r, t)});
  return out;
}

SessionRecord random_labels(std::mt19937_64& rng, const std::string& id) {
  SessionRecord r;
  r.session_id = id;
  double t = 0.0;
  const int spans = 1 + static_cast<int>(rng() % 8);
  for (int i = 0; i < spans; ++i) {
    const double end = wire::quantize_time(t + std::uniform_real_distribution<double>(0.5, 10.0)(rng));
    r.labels.push_back({t, end, kAllNeedLevels[rng() % 5]});
    t = end;
  }
  r.duration = t;
  return r;
}

}  // namespace

TEST(Metrics, DirectFormula) {
  const auto m = metrics_from({3, 1, 1, 0});
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.75);
  EXPECT_DOUBLE_EQ(m.f1, 0.75);
  EXPECT_FALSE(m.precision_undefined);
}

TEST(Metrics, DegenerateCases) {
  const auto none = metrics_from({0, 0, 0, 12});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_TRUE(none.precision_undefined);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_TRUE(none.recall_undefined);
  EXPECT_EQ(none.f1, 0.0);
  const auto misses = metrics_from({0, 0, 4, 3});
  EXPECT_TRUE(misses.precision_undefined);
  EXPECT_FALSE(misses.recall_undefined);
  EXPECT_EQ(misses.f1, 0.0);
  const auto wrong = metrics_from({0, 2, 2, 0});
  EXPECT_FALSE(wrong.precision_undefined);
  EXPECT_EQ(wrong.f1, 0.0);
}

TEST(Metrics, PropertyF1IsHarmonicMean) {
  for (std::size_t tp = 0; tp <= 5; ++tp) {
    for (std::size_t fp = 0; fp <= 5; ++fp) {
      for (std::size_t fn = 0; fn <= 5; ++fn) {
        const auto m = metrics_from({tp, fp, fn, 1});
        const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        EXPECT_DOUBLE_EQ(m.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0);
        EXPECT_GE(m.f1, 0.0);
        EXPECT_LE(m.f1, 1.0);
      }
    }
  }
}

TEST(Evaluate, PerfectPredictions) {
  const auto r = labeled_session("e", {{0.0, 3.0, NeedLevelLabel::Flow}, {3.0, 5.0, NeedLevelLabel::L2}});
  const auto m = evaluate(truth(r), r, 10.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.counts.tp, 21u);  // ticks 3.0 .. 5.0
  EXPECT_EQ(m.counts.tn, 30u);
}

TEST(Evaluate, AllNegativeSession) {
  const auto r = labeled_session("n", {{0.0, 4.0, NeedLevelLabel::L1}});
  const auto m = evaluate(constant_predictions(r, 0), r, 10.0);
  EXPECT_TRUE(m.precision_undefined);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Evaluate, MisalignedGridRejected) {
  const auto r = labeled_session("m", {{0.0, 4.0, NeedLevelLabel::L3}});
  std::vector<TickPrediction> off{{0.0, 1}, {0.15, 1}};
  EXPECT_THROW(evaluate(off, r, 10.0), DataError);
  std::vector<TickPrediction> backwards{{0.2, 1}, {0.1, 1}};
  EXPECT_THROW(evaluate(backwards, r, 10.0), DataError);
  std::vector<TickPrediction> beyond{{4.1, 1}};
  EXPECT_THROW(evaluate(beyond, r, 10.0), DataError);
  // File-precision times (3 decimals) of a 3 Hz grid are accepted.
  std::vector<TickPrediction> coarse{{0.333, 1}, {0.667, 1}, {1.0, 1}};
  EXPECT_EQ(evaluate(coarse, r, 3.0).counts.tp, 3u);
}

TEST(ThresholdEval, ConstantStreams) {
  const auto pos = labeled_session("p", {{0.0, 2.0, NeedLevelLabel::L3}});
  std::vector<Message<double>> high, low;
  for (auto t : tick_grid(pos.duration, 10.0)) {
    high.push_back({t, 0.6});
    low.push_back({t, 0.4});
  }
  EXPECT_EQ(threshold_model_eval(high, pos, 10.0).recall, 1.0);
  const auto m = threshold_model_eval(low, pos, 10.0);
  EXPECT_EQ(m.counts.tp + m.counts.fp, 0u);
}

TEST(ThresholdEval, PropertyEqualsEvaluateOfHandBinarized) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = random_labels(rng, "t");
    std::vector<Message<double>> stream;
    std::vector<TickPrediction> manual;
    for (auto t : tick_grid(r.duration, 10.0)) {
      const double v = std::uniform_int_distribution<int>(0, 10)(rng) / 10.0;
      stream.push_back({t, v});
      manual.push_back({t, v >= 0.5 ? 1 : 0});
    }
    EXPECT_EQ(threshold_model_eval(stream, r, 10.0), evaluate(manual, r, 10.0));
  }
}

TEST(KFold, TwentySessionsTenFolds) {
  const auto folds = kfold(20, 10, 3);
  ASSERT_EQ(folds.size(), 10u);
  std::vector<int> seen(20, 0);
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 2u);
    EXPECT_EQ(f.train.size(), 18u);
    for (auto i : f.test) ++seen[i];
    std::set<std::size_t> all(f.train.begin(), f.train.end());
    for (auto i : f.test) EXPECT_FALSE(all.count(i));
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(kfold(20, 10, 3)[4].test, folds[4].test);
}

TEST(KFold, PropertyPartitionAndBalance) {
  for (std::size_t n = 2; n < 40; n += 3) {
    for (std::size_t k = 2; k <= std::min<std::size_t>(n, 11); ++k) {
      const auto folds = kfold(n, k, n * 31 + k);
      std::vector<int> seen(n, 0);
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.test.size());
        hi = std::max(hi, f.test.size());
        for (auto i : f.test) ++seen[i];
        EXPECT_EQ(f.test.size() + f.train.size(), n);
      }
      EXPECT_LE(hi - lo, 1u);
      for (int s : seen) EXPECT_EQ(s, 1);
    }
  }
  EXPECT_NE(kfold(30, 3, 1)[0].test, kfold(30, 3, 2)[0].test);
  EXPECT_THROW(kfold(3, 4, 0), std::invalid_argument);
  EXPECT_THROW(kfold(3, 1, 0), std::invalid_argument);
}

TEST(AverageHelp, Examples) {
  EXPECT_DOUBLE_EQ(average_help(labeled_session("f", {{0.0, 42.0, NeedLevelLabel::Flow}})), -1.0);
  const auto mixed = labeled_session("m", {{0.0, 30.0, NeedLevelLabel::Flow},
                                           {30.0, 40.0, NeedLevelLabel::L1},
                                           {40.0, 60.0, NeedLevelLabel::L3}});
  EXPECT_NEAR(average_help(mixed), 40.0 / 60.0, 1e-12);
  EXPECT_DOUBLE_EQ(average_help(labeled_session("l", {{0.0, 7.0, NeedLevelLabel::L2}})), 2.0);
}

TEST(AverageHelp, PropertySplitInvariant) {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    auto r = random_labels(rng, "s");
    const double before = average_help(r);
    const auto i = rng() % r.labels.size();
    const auto span = r.labels[i];
    const double cut = std::uniform_real_distribution<double>(span.start, span.end)(rng);
    if (!(cut > span.start && cut < span.end)) continue;
    r.labels[i].end = cut;
    r.labels.insert(r.labels.begin() + static_cast<std::ptrdiff_t>(i) + 1, LabelSpan{cut, span.end, span.level});
    EXPECT_NEAR(average_help(r), before, 1e-12);
  }
}

TEST(Aggregation, PropertyMicroAverageEqualsSummedCounts) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    Confusion summed;
    std::vector<std::pair<SessionRecord, std::vector<TickPrediction>>> parts;
    for (int s = 0; s < 5; ++s) {
      auto r = random_labels(rng, "a" + std::to_string(s));
      auto preds = constant_predictions(r, 0);
      for (auto& p : preds) p.label = static_cast<int>(rng() % 2);
      summed += confusion(preds, r, 10.0);
      parts.push_back({std::move(r), std::move(preds)});
    }
    // Concatenate every session into one long record and evaluate it once.
    SessionRecord joined;
    joined.session_id = "joined";
    std::vector<TickPrediction> all;
    double offset = 0.0;
    for (const auto& [r, preds] : parts) {
      for (const auto& l : r.labels) joined.labels.push_back({l.start + offset, l.end + offset, l.level});
      offset += 1000.0;
      joined.labels.back().end = offset;
    }
    joined.duration = offset;
    offset = 0.0;
    for (const auto& [r, preds] : parts) {
      for (const auto& p : preds) all.push_back({p.t + offset, p.label});
      offset += 1000.0;
    }
    EXPECT_EQ(confusion(all, joined, 10.0), summed);
    EXPECT_EQ(evaluate(all, joined, 10.0), metrics_from(summed));
  }
}

namespace {

std::vector<SessionRecord> small_corpus(std::size_t n, std::uint64_t seed) {
  CorpusOptions options;
  options.sessions = n;
  options.seed = seed;
  options.cycles = 2;
  std::vector<SessionRecord> out;
  for (const auto& s : generate_corpus(options)) out.push_back(simulate(s));
  return out;
}

EvalConfig quick_config() {
  EvalConfig c;
  c.folds = 3;
  c.forest.n_trees = 10;
  c.seed = 9;
  return c;
}

}  // namespace

TEST(FullEval, DeterministicWithAllFourRows) {
  const auto ds0 = small_corpus(6, 2);
  const auto a = run_full_eval(ds0, quick_config());
  const auto b = run_full_eval(ds0, quick_config());
  EXPECT_EQ(format_key_values(a), format_key_values(b));
  const auto table = format_table(a);
  for (const char* row : {"Mutual", "Confirmatory", "Language", "Fusion"}) {
    EXPECT_NE(table.find(row), std::string::npos) << row;
  }
  EXPECT_EQ(a.help.size(), 6u);
  // Every model is scored on the same ticks.
  const auto total = a[ModelKind::Mutual].counts.total();
  for (auto kind : kAllModelKinds) EXPECT_EQ(a[kind].counts.total(), total);
  auto parallel = quick_config();
  parallel.parallel = true;
  EXPECT_EQ(format_key_values(run_full_eval(ds0, parallel)), format_key_values(a));
}

TEST(FullEval, OracleLanguageIsPickedUpByFusion) {
  const auto ds0 = small_corpus(6, 3);
  auto config = quick_config();
  config.adjust_ds1 = [](SessionRecord& ds1) {
    for (auto& m : ds1.messages) {
      if (m.stream == StreamId::NeedLanguage) m.payload = binary_tick_label(ds1, m.t) ? 1.0 : 0.0;
    }
  };
  const auto report = run_full_eval(ds0, config);
  EXPECT_EQ(report[ModelKind::Language].f1, 1.0);
  // Perfect evidence in the newest frame of every window is picked up by the forest.
  EXPECT_GT(report[ModelKind::Fusion].f1, 0.95);
  EXPECT_GT(report[ModelKind::Fusion].f1, report[ModelKind::Mutual].f1);
}

TEST(FullEval, TooFewSessionsRejected) {
  const auto ds0 = small_corpus(2, 1);
  EXPECT_THROW(run_full_eval(ds0, quick_config()), std::invalid_argument);
}
