// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "app/commands.hpp"
#include "fixtures.hpp"
#include "helpsense/eval.hpp"
#include "helpsense/fusion.hpp"
#include "helpsense/scenario.hpp"
#include "helpsense/wire.hpp"

using namespace helpsense;
using helpsense::testing::TempDir;
namespace fs = std::filesystem;
using Rational = boost::multiprecision::cpp_rational;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
  if (!condition) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int decimals = 3) { return wire::format_fixed(v, decimals); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "helpsense");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in;
  std::ostringstream o, e;
  const int code = app::run_cli(static_cast<int>(argv.size()), argv.data(), in, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "%s", e.str().c_str());
  return code;
}

// Offline gaze oracle: box classification, two-frame debounce, and the two
// need formulas written out directly.
// Targets: 'r' robot, 't' task, 'e' elsewhere.
char oracle_target(const GazeObservation& g) {
  constexpr double th = 0.15;
  const bool yaw_center = std::abs(g.yaw) <= th;
  const bool pitch_center = std::abs(g.pitch) <= th;
  if (yaw_center && pitch_center) return 'r';
  if (g.pitch < -th) return 't';
  return 'e';
}

struct OracleGaze {
  std::vector<double> t, mutual, confirmatory;
};

OracleGaze oracle_gaze(const std::vector<Message<GazeObservation>>& frames) {
  OracleGaze out;
  std::vector<char> targets;
  for (const auto& f : frames) targets.push_back(oracle_target(f.payload));
  char current = 0;
  double start = 0.0;
  bool have_previous = false;
  char previous = 0;
  double previous_length = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i == 0) {
      current = targets[0];
      start = frames[0].t;
    } else if (targets[i] != current && targets[i] == targets[i - 1]) {
      // Two consecutive frames of a new target; the run starts at the first.
      have_previous = true;
      previous = current;
      previous_length = frames[i - 1].t - start;
      current = targets[i];
      start = frames[i - 1].t;
    }
    const double d = frames[i].t - start;
    out.t.push_back(frames[i].t);
    out.mutual.push_back(current == 'r' ? std::min(1.0, d / 2.5) : 0.0);
    const bool alternating = have_previous && ((previous == 't' && current == 'r') || (previous == 'r' && current == 't'));
    out.confirmatory.push_back(alternating && previous_length < 2.5 && d < 2.5 ? std::min(1.0, d / 2.5) : 0.0);
  }
  return out;
}

std::vector<ScenarioScript> gaze_scripts() {
  auto make = [](std::string id, std::vector<ScriptSegment> segments) {
    ScenarioScript s;
    s.script_id = std::move(id);
    s.segments = std::move(segments);
    s.noise = 0.0;
    return s;
  };
  std::vector<ScenarioScript> out;
  out.push_back(make("robot", {{6.0, NeedLevelLabel::L3, GazeBehavior::FixRobot, 0.0, {}}}));
  out.push_back(make("mixed", {{2.0, NeedLevelLabel::Flow, GazeBehavior::FixTask, 0.0, {}},
                               {4.0, NeedLevelLabel::L3, GazeBehavior::FixRobot, 0.0, {}},
                               {3.0, NeedLevelLabel::L1, GazeBehavior::FixAway, 0.0, {}},
                               {1.2, NeedLevelLabel::L3, GazeBehavior::FixRobot, 0.0, {}},
                               {6.0, NeedLevelLabel::L2, GazeBehavior::AlternateTaskRobot, 1.1, {}}}));
  CorpusOptions corpus;
  corpus.sessions = 4;
  corpus.noise = 0.0;
  corpus.seed = 21;
  for (auto& s : generate_corpus(corpus)) out.push_back(std::move(s));
  return out;
}

Outcome criterion_gaze() {
  const auto sessions = gaze_scripts();
  std::vector<SessionRecord> records;
  for (const auto& s : sessions) records.push_back(simulate(s));
  const auto start = std::chrono::steady_clock::now();
  std::size_t frames = 0;
  double worst = 0.0;
  for (const auto& r : records) {
    Pipeline p;
    auto& raw = p.create<GazeObservation>(StreamId::GazeRaw);
    auto mutual = record(wire_gaze(p, raw, GazeConfig{}).mutual);
    const auto gaze = gaze_messages(r);
    for (const auto& g : gaze) raw.emit(g.t, g.payload);
    const auto oracle = oracle_gaze(gaze);
    require(mutual->size() == gaze.size(), r.session_id + ": one mutual value per frame");
    for (std::size_t i = 0; i < gaze.size(); ++i) {
      require((*mutual)[i].t == oracle.t[i], r.session_id + ": frame time");
      worst = std::max(worst, std::abs((*mutual)[i].payload - oracle.mutual[i]));
    }
    frames += gaze.size();
  }
  const double elapsed = seconds_since(start);
  require(worst <= 1e-9, "max deviation " + std::to_string(worst));
  require(mutual_gaze_need(GazeRun{GazeTarget::Robot, 0.0, 1.25}) == 0.5, "1.25 s of robot gaze gives 0.5");
  require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  return {true, std::to_string(frames) + " frames, max deviation " + std::to_string(worst) + ", " + fmt(elapsed) + " s"};
}

// Exact multinomial Bayes over rational arithmetic.
struct ExactBayes {
  std::map<std::string, std::array<std::uint64_t, 2>> counts;
  std::array<std::uint64_t, 2> docs{}, totals{};
  Rational alpha;

  ExactBayes(const std::vector<LabeledFeatures>& corpus, Rational a) : alpha(std::move(a)) {
    for (const auto& d : corpus) {
      ++docs[d.label];
      for (const auto& [tok, n] : d.features.counts) {
        counts[tok][d.label] += n;
        totals[d.label] += n;
      }
    }
  }
  Rational likelihood(const std::string& tok, int c) const {
    const auto it = counts.find(tok);
    if (it == counts.end()) return 0;
    return (Rational(it->second[c]) + alpha) / (Rational(totals[c]) + alpha * Rational(counts.size()));
  }
  std::array<Rational, 2> posterior(const UtteranceFeatures& f) const {
    std::array<Rational, 2> joint;
    for (int c : {0, 1}) {
      joint[c] = Rational(docs[c]) / Rational(docs[0] + docs[1]);
      for (const auto& [tok, n] : f.counts) {
        if (!counts.count(tok)) continue;
        for (std::uint64_t k = 0; k < n; ++k) joint[c] *= likelihood(tok, c);
      }
    }
    const Rational z = joint[0] + joint[1];
    return {joint[0] / z, joint[1] / z};
  }
};

LabeledFeatures doc(const std::string& text, int label, bool aggregates) {
  return {extract_features(tokenize(text), aggregates), label};
}

Outcome criterion_bayes() {
  struct Corpus {
    std::vector<std::pair<std::string, int>> docs;
    Rational alpha;
    bool aggregates;
    std::vector<std::string> probes;
  };
  const std::vector<Corpus> corpora{
      {{{"where is the red block", 1}, {"i am fine", 0}, {"can you help me", 1}, {"this is fun", 0}},
       1,
       true,
       {"where is it", "fine fine fine", "unknown words only", "", "can you not help"}},
      {{{"help help help", 1}, {"no", 0}, {"okay done", 0}, {"what next", 1}, {"i don't know", 1}, {"done", 0}},
       Rational(1, 2),
       true,
       {"help", "done done", "what do i do", "don't"}},
      {{{"a b c d e f g h i j", 1}, {"a a a b", 0}, {"c c", 0}, {"j i h", 1}, {"k", 0}},
       Rational(3, 4),
       false,
       {"a", "j j j j", "k a j", "z"}},
  };
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checks = 0;
  for (const auto& c : corpora) {
    std::vector<LabeledFeatures> rows;
    for (const auto& [text, label] : c.docs) rows.push_back(doc(text, label, c.aggregates));
    const auto model = NaiveBayesModel::train(rows, c.alpha.convert_to<double>(), c.aggregates);
    const ExactBayes oracle(rows, c.alpha);
    require(model.vocabulary_size() == oracle.counts.size(), "vocabulary size");
    for (const auto& [tok, n] : oracle.counts) {
      for (int cls : {0, 1}) {
        worst = std::max(worst, std::abs(model.likelihood(tok, cls) - oracle.likelihood(tok, cls).convert_to<double>()));
        ++checks;
      }
    }
    std::vector<std::string> probes = c.probes;
    for (const auto& [text, label] : c.docs) probes.push_back(text);
    for (const auto& probe : probes) {
      const auto f = extract_features(tokenize(probe), c.aggregates);
      const auto got = model.posterior(f);
      const auto want = oracle.posterior(f);
      for (int cls : {0, 1}) {
        worst = std::max(worst, std::abs(got[cls] - want[cls].convert_to<double>()));
        ++checks;
      }
    }
  }
  const double elapsed = seconds_since(start);
  require(worst <= 1e-9, "max deviation " + std::to_string(worst));
  require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  return {true, std::to_string(corpora.size()) + " corpora, " + std::to_string(checks) + " values, max deviation " +
                    std::to_string(worst)};
}

Outcome criterion_window() {
  CorpusOptions corpus;
  corpus.sessions = 3;
  corpus.seed = 8;
  std::vector<SessionRecord> ds0;
  for (const auto& s : generate_corpus(corpus)) ds0.push_back(simulate(s));
  const auto model = train_language(ds0, 1.0, true);

  ScenarioScript script;
  script.script_id = "hundred";
  script.noise = 0.02;
  script.seed = 4;
  script.segments = {{3.0, NeedLevelLabel::Flow, GazeBehavior::FixTask, 0.0, {{0.7, "okay this is fine"}}},
                     {2.9, NeedLevelLabel::L2, GazeBehavior::AlternateTaskRobot, 0.8, {{1.0, "where is the manual"}}},
                     {4.0, NeedLevelLabel::L3, GazeBehavior::FixRobot, 0.0, {{0.5, "can you help me"}, {3.2, "please"}}}};
  const auto session = simulate(script);
  PipelineConfig config;  // 10 Hz, W = 20
  const auto ds1 = materialize_session(session, model, config);
  const std::vector<SessionRecord> one{ds1};
  const auto matrix = export_fusion_matrix(one, config.window);

  // Offline: frame-rate oracle values, held onto k/10 and windowed by hand.
  const auto gaze = gaze_messages(session);
  const auto oracle = oracle_gaze(gaze);
  std::vector<std::pair<double, double>> language;
  for (const auto& u : utterances(session)) {
    if (const auto v = model.need(u.text)) language.emplace_back(u.t, *v);
  }
  const std::size_t ticks = 100;
  require(std::floor(session.duration * 10.0 + 1e-9) + 1 == ticks, "session spans 100 ticks");
  std::vector<std::array<double, 3>> held(ticks, {0.0, 0.0, 0.0});
  for (std::size_t k = 0; k < ticks; ++k) {
    const double tick = static_cast<double>(k) / 10.0;
    for (std::size_t i = 0; i < oracle.t.size() && oracle.t[i] <= tick; ++i) {
      held[k][0] = oracle.mutual[i];
      held[k][1] = oracle.confirmatory[i];
    }
    for (const auto& [t, v] : language) {
      if (t <= tick) held[k][2] = v;
    }
    for (auto& v : held[k]) v = wire::quantize_value(v);
  }
  auto truth = [&](double t) {
    for (const auto& l : session.labels) {
      if (l.start <= t && (t < l.end || (l.end == session.duration && t == session.duration))) {
        return l.level == NeedLevelLabel::L2 || l.level == NeedLevelLabel::L3 ? 1 : 0;
      }
    }
    throw Failure("tick outside labels");
  };

  require(matrix.rows.size() == 81, "rows " + std::to_string(matrix.rows.size()));
  require(matrix.dimension == 60, "dimension " + std::to_string(matrix.dimension));
  std::size_t compared = 0;
  for (std::size_t r = 0; r < 81; ++r) {
    const auto& row = matrix.rows[r];
    const std::size_t anchor = r + 19;
    require(row.features.size() == 60, "row width");
    require(row.anchor_t == static_cast<double>(anchor) / 10.0, "anchor of row " + std::to_string(r));
    require(row.label == truth(static_cast<double>(anchor) / 10.0), "label of row " + std::to_string(r));
    for (std::size_t j = 0; j < 20; ++j) {
      for (std::size_t m = 0; m < 3; ++m) {
        require(row.features[3 * j + m] == held[r + j][m],
                "row " + std::to_string(r) + " element " + std::to_string(3 * j + m));
        ++compared;
      }
    }
  }
  return {true, "81 rows x 60, " + std::to_string(compared) + " elements identical"};
}

double gini(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  double ones = 0;
  for (int l : labels) ones += l;
  const double p = ones / static_cast<double>(labels.size());
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

TrainingMatrix matrix_of(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  TrainingMatrix m;
  m.dimension = x.front().size();
  for (std::size_t i = 0; i < x.size(); ++i) m.rows.push_back({x[i], y[i], "s", static_cast<double>(i)});
  return m;
}

Outcome criterion_forest() {
  // Stump: enumerate every midpoint and keep the best weighted Gini.
  const std::vector<double> xs{-1.0, -0.5, -0.25, 0.0, 0.5, 1.0};
  const std::vector<int> ys{0, 0, 0, 1, 1, 1};
  double best = 1e9;
  double best_threshold = 0.0;
  int optima = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double thr = (xs[i] + xs[i + 1]) / 2.0;
    std::vector<int> left, right;
    for (std::size_t j = 0; j < xs.size(); ++j) (xs[j] <= thr ? left : right).push_back(ys[j]);
    const double w = (left.size() * gini(left) + right.size() * gini(right)) / xs.size();
    if (w < best - 1e-12) {
      best = w;
      best_threshold = thr;
      optima = 1;
    } else if (std::abs(w - best) <= 1e-12) {
      ++optima;
    }
  }
  require(optima == 1, "oracle optimum is unique");
  std::vector<std::vector<double>> x1;
  for (double v : xs) x1.push_back({v});
  ForestConfig stump;
  stump.n_trees = 1;
  stump.bootstrap = false;
  const auto one = RandomForest::train(matrix_of(x1, ys), stump);
  const auto& nodes = one.trees().at(0).nodes();
  require(nodes.size() == 3, "stump has three nodes");
  require(nodes[0].feature == 0 && nodes[0].threshold == best_threshold, "root threshold " + fmt(nodes[0].threshold, 6));
  require(nodes[nodes[0].left].label == 0 && nodes[nodes[0].right].label == 1, "leaf labels");

  // Memorization on random consistent datasets.
  std::mt19937_64 rng(17);
  std::size_t datasets = 0;
  for (std::size_t n : {10, 57, 120, 200}) {
    for (std::size_t dim : {1, 3, 12}) {
      std::vector<std::vector<double>> x;
      std::vector<int> y;
      std::map<std::vector<double>, int> seen;
      while (x.size() < n) {
        std::vector<double> row(dim);
        for (auto& v : row) v = std::uniform_int_distribution<int>(0, 400)(rng) / 8.0;
        if (seen.count(row)) continue;
        const int label = static_cast<int>(rng() % 2);
        seen[row] = label;
        x.push_back(row);
        y.push_back(label);
      }
      if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
      ForestConfig config;
      config.n_trees = 15;
      config.bootstrap = false;
      config.seed = n + dim;
      const auto forest = RandomForest::train(matrix_of(x, y), config);
      for (std::size_t i = 0; i < n; ++i) {
        require(forest.predict(x[i]).label == y[i], "memorization n=" + std::to_string(n) + " dim=" + std::to_string(dim));
      }
      ++datasets;
    }
  }

  // Bit-for-bit reproducibility with bootstrap on.
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 150; ++i) {
    x.push_back({std::uniform_real_distribution<double>(-1, 1)(rng), std::uniform_real_distribution<double>(-1, 1)(rng)});
    y.push_back(x.back()[0] + 0.3 * x.back()[1] > 0 ? 1 : 0);
  }
  ForestConfig seeded;
  seeded.n_trees = 25;
  seeded.seed = 99;
  const auto a = RandomForest::train(matrix_of(x, y), seeded).serialize();
  const auto b = RandomForest::train(matrix_of(x, y), seeded).serialize();
  require(a == b, "same seed gives the same model text");
  seeded.seed = 100;
  require(RandomForest::train(matrix_of(x, y), seeded).serialize() != a, "seed changes the model");
  return {true, "stump at " + fmt(best_threshold, 3) + ", " + std::to_string(datasets) +
                    " datasets memorized, model text reproducible"};
}

Outcome criterion_fusion() {
  CorpusOptions corpus;
  corpus.sessions = 24;
  corpus.seed = 1;
  std::vector<SessionRecord> ds0;
  for (const auto& s : generate_corpus(corpus)) ds0.push_back(simulate(s));
  EvalConfig config;
  config.folds = 10;
  config.seed = 7;
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_full_eval(ds0, config);
  const double elapsed = seconds_since(start);
  double best_part = 0.0;
  std::string detail;
  for (auto kind : kAllModelKinds) {
    detail += std::string(to_string(kind)) + " " + fmt(report[kind].f1) + " ";
    if (kind != ModelKind::Fusion) best_part = std::max(best_part, report[kind].f1);
  }
  detail += "(" + fmt(elapsed, 1) + " s)";
  require(report[ModelKind::Fusion].f1 >= best_part + 0.05, detail);
  require(elapsed < 60.0, detail);
  return {true, detail};
}

Outcome criterion_live_batch() {
  TempDir dir;
  const auto ds0 = dir / "ds0";
  const auto models = dir / "models";
  require(cli({"simulate", "--corpus", "6", "--seed", "12", "--out", ds0.string()}) == 0, "simulate");
  require(cli({"train", ds0.string(), "--out", models.string(), "--set", "forest.n_trees=30"}) == 0, "train");
  const auto forest = RandomForest::parse(slurp(models / app::kForestModelName));
  std::size_t sessions = 0;
  std::size_t ticks = 0;
  for (const auto& entry : fs::directory_iterator(ds0)) {
    std::string out;
    require(cli({"run", "--models", models.string(), "--session", entry.path().string()}, &out) == 0, "run");
    const auto ds1 = load_session(models / app::kDs1DirName / entry.path().filename());
    std::string expected;
    const auto decisions = batch_decisions(ds1, forest, 20);
    for (const auto& d : decisions) expected += app::format_decision(d) + "\n";
    require(!decisions.empty(), "decisions exist");
    require(out == expected, "replay differs from batch on " + entry.path().filename().string());
    ++sessions;
    ticks += decisions.size();
  }
  return {true, std::to_string(sessions) + " sessions, " + std::to_string(ticks) + " identical decisions"};
}

Outcome criterion_metrics() {
  std::size_t matrices = 0;
  for (std::size_t tp = 0; tp <= 5; ++tp) {
    for (std::size_t fp = 0; fp <= 5; ++fp) {
      for (std::size_t fn = 0; fn <= 5; ++fn) {
        for (std::size_t tn = 0; tn <= 5; ++tn) {
          // Negatives on [0, 10), positives on [10, 20) at 1 Hz.
          const auto session = helpsense::testing::labeled_session(
              "m", {{0.0, 10.0, NeedLevelLabel::Flow}, {10.0, 20.0, NeedLevelLabel::L3}});
          std::vector<TickPrediction> preds;
          double t = 0.0;
          for (std::size_t i = 0; i < fp; ++i) preds.push_back({t++, 1});
          for (std::size_t i = 0; i < tn; ++i) preds.push_back({t++, 0});
          t = 10.0;
          for (std::size_t i = 0; i < tp; ++i) preds.push_back({t++, 1});
          for (std::size_t i = 0; i < fn; ++i) preds.push_back({t++, 0});
          const auto m = evaluate(preds, session, 1.0);
          const double p = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
          const double r = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
          const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
          const std::string id = " at tp=" + std::to_string(tp) + " fp=" + std::to_string(fp) +
                                 " fn=" + std::to_string(fn) + " tn=" + std::to_string(tn);
          require(m.counts == Confusion{tp, fp, fn, tn}, "counts" + id);
          require(std::abs(m.precision - p) <= 1e-12 && std::abs(m.recall - r) <= 1e-12 &&
                      std::abs(m.f1 - f) <= 1e-12,
                  "ratios" + id);
          require(m.precision_undefined == (tp + fp == 0) && m.recall_undefined == (tp + fn == 0), "flags" + id);
          ++matrices;
        }
      }
    }
  }
  return {true, std::to_string(matrices) + " confusion matrices"};
}

Outcome criterion_average_help() {
  using helpsense::testing::labeled_session;
  const double flow = average_help(labeled_session("f", {{0.0, 30.0, NeedLevelLabel::Flow}}));
  require(flow == -1.0, "all-Flow gives " + std::to_string(flow));
  const double mixed = average_help(labeled_session(
      "m", {{0.0, 30.0, NeedLevelLabel::Flow}, {30.0, 40.0, NeedLevelLabel::L1}, {40.0, 60.0, NeedLevelLabel::L3}}));
  require(std::abs(mixed - 0.6667) <= 1e-4 && std::abs(mixed - 2.0 / 3.0) <= 1e-9, "mixed gives " + fmt(mixed, 9));
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    SessionRecord r;
    r.session_id = "r";
    double t = 0.0;
    const int spans = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < spans; ++i) {
      const double end = wire::quantize_time(t + std::uniform_real_distribution<double>(0.1, 20.0)(rng));
      r.labels.push_back({t, end, kAllNeedLevels[rng() % kAllNeedLevels.size()]});
      t = end;
    }
    r.duration = t;
    const double before = average_help(r);
    auto split = r;
    const auto i = rng() % split.labels.size();
    const auto span = split.labels[i];
    const double cut = wire::quantize_time((span.start + span.end) / 2.0);
    if (cut <= span.start || cut >= span.end) continue;
    split.labels[i].end = cut;
    split.labels.insert(split.labels.begin() + static_cast<std::ptrdiff_t>(i + 1), LabelSpan{cut, span.end, span.level});
    require(std::abs(average_help(split) - before) <= 1e-9, "split changes the statistic");
  }
  return {true, "flow -1, mixed " + fmt(mixed, 4) + ", 100 split sessions invariant"};
}

Outcome criterion_determinism() {
  TempDir dir;
  std::array<std::string, 2> manifests, reports, tables;
  for (int run = 0; run < 2; ++run) {
    const auto root = dir / ("run" + std::to_string(run));
    const auto ds0 = (root / "ds0").string();
    const std::vector<std::string> common{"--seed", "31", "--set", "forest.n_trees=40"};
    auto with = [&](std::vector<std::string> args) {
      args.insert(args.end(), common.begin(), common.end());
      return args;
    };
    require(cli(with({"simulate", "--corpus", "12", "--out", ds0})) == 0, "simulate");
    require(cli(with({"train", ds0, "--out", (root / "models").string()})) == 0, "train");
    require(cli(with({"eval", ds0, "--folds", "4", "--out", (root / "report.txt").string()}), &tables[run]) == 0,
            "eval");
    manifests[run] = slurp(root / "models" / app::kManifestName);
    reports[run] = slurp(root / "report.txt");
  }
  require(!manifests[0].empty() && manifests[0] == manifests[1], "manifests differ");
  require(!reports[0].empty() && reports[0] == reports[1], "reports differ");
  require(tables[0] == tables[1], "printed tables differ");
  return {true, "manifest " + app::sha256_hex(manifests[0]).substr(0, 12) + ", report " +
                    app::sha256_hex(reports[0]).substr(0, 12) + " identical across runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gaze formula exactness", criterion_gaze},
      {"naive Bayes oracle equivalence", criterion_bayes},
      {"window and export exactness", criterion_window},
      {"forest sanity", criterion_forest},
      {"fusion beats the single models", criterion_fusion},
      {"live and batch equivalence", criterion_live_batch},
      {"metrics closed form", criterion_metrics},
      {"average help", criterion_average_help},
      {"end-to-end determinism", criterion_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
