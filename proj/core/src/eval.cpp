#include "helpsense/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>

#include "helpsense/wire.hpp"

namespace helpsense {

void Confusion::add(int predicted, int truth) {
  if (predicted) {
    truth ? ++tp : ++fp;
  } else {
    truth ? ++fn : ++tn;
  }
}

Confusion& Confusion::operator+=(const Confusion& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

Metrics metrics_from(const Confusion& counts) {
  Metrics m;
  m.counts = counts;
  const auto predicted = counts.tp + counts.fp;
  const auto actual = counts.tp + counts.fn;
  m.precision_undefined = predicted == 0;
  m.recall_undefined = actual == 0;
  if (!m.precision_undefined) m.precision = static_cast<double>(counts.tp) / static_cast<double>(predicted);
  if (!m.recall_undefined) m.recall = static_cast<double>(counts.tp) / static_cast<double>(actual);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Confusion confusion(std::span<const TickPrediction> predictions, const SessionRecord& record, double cadence) {
  if (!(cadence > 0.0)) throw std::invalid_argument("cadence must be > 0");
  const auto last_tick = static_cast<std::int64_t>(std::floor(record.duration * cadence + 1e-9));
  Confusion out;
  std::int64_t previous = -1;
  for (const auto& p : predictions) {
    const auto k = std::llround(p.t * cadence);
    const double grid_t = static_cast<double>(k) / cadence;
    if (std::abs(grid_t - p.t) > 0.5e-3 + 1e-9 || k < 0 || k > last_tick) {
      throw DataError("session " + record.session_id + ": prediction at " + wire::format_short(p.t) +
                      " is not on the tick grid");
    }
    if (k <= previous) {
      throw DataError("session " + record.session_id + ": predictions out of order at " + wire::format_short(p.t));
    }
    previous = k;
    out.add(p.label ? 1 : 0, binary_tick_label(record, grid_t));
  }
  return out;
}

Metrics evaluate(std::span<const TickPrediction> predictions, const SessionRecord& record, double cadence) {
  return metrics_from(confusion(predictions, record, cadence));
}

std::vector<TickPrediction> binarize(std::span<const Message<double>> need, double threshold) {
  std::vector<TickPrediction> out;
  out.reserve(need.size());
  for (const auto& m : need) out.push_back({m.t, m.payload >= threshold ? 1 : 0});
  return out;
}

Metrics threshold_model_eval(std::span<const Message<double>> need, const SessionRecord& record, double cadence,
                             double threshold) {
  const auto predictions = binarize(need, threshold);
  return evaluate(predictions, record, cadence);
}

std::vector<Fold> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("folds must be >= 2");
  if (n < k) {
    throw std::invalid_argument("cannot split " + std::to_string(n) + " sessions into " + std::to_string(k) +
                                " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is the same on every
  // standard library.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].test.push_back(order[i]);
  for (auto& f : folds) {
    std::sort(f.test.begin(), f.test.end());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::binary_search(f.test.begin(), f.test.end(), i)) f.train.push_back(i);
    }
  }
  return folds;
}

double average_help(const SessionRecord& record) {
  if (!(record.duration > 0.0)) throw DataError("session " + record.session_id + ": duration must be > 0");
  double sum = 0.0;
  for (const auto& span : record.labels) sum += help_weight(span.level) * (span.end - span.start);
  return sum / record.duration;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mutual: return "Mutual";
    case ModelKind::Confirmatory: return "Confirmatory";
    case ModelKind::Language: return "Language";
    case ModelKind::Fusion: return "Fusion";
  }
  return "?";
}

namespace {

using FoldCounts = std::array<Confusion, 4>;

std::vector<TickPrediction> post_warmup(std::span<const Message<double>> need, std::size_t window) {
  if (need.size() < window) return {};
  return binarize(need.subspan(window - 1));
}

FoldCounts run_fold(std::span<const SessionRecord> ds0, const Fold& fold, std::size_t fold_index,
                    const EvalConfig& config) {
  std::vector<SessionRecord> train_ds0;
  for (auto i : fold.train) train_ds0.push_back(ds0[i]);
  const auto nb = train_language(train_ds0, config.nb_alpha, config.nb_aggregates);

  auto train_ds1 = stage1_materialize(train_ds0, nb, config.pipeline);
  if (config.adjust_ds1) {
    for (auto& s : train_ds1) config.adjust_ds1(s);
  }
  ForestConfig forest_config = config.forest;
  forest_config.seed = config.forest.seed + 0x9E3779B97F4A7C15ULL * (fold_index + 1);
  const auto forest = stage2_train(train_ds1, config.pipeline.window, forest_config);

  FoldCounts counts;
  const double cadence = config.pipeline.cadence_hz;
  const std::size_t window = config.pipeline.window;
  for (auto i : fold.test) {
    auto ds1 = materialize_session(ds0[i], nb, config.pipeline);
    if (config.adjust_ds1) config.adjust_ds1(ds1);
    const auto mutual = need_messages(ds1, StreamId::NeedMutual);
    const auto confirmatory = need_messages(ds1, StreamId::NeedConfirmatory);
    const auto language = need_messages(ds1, StreamId::NeedLanguage);
    counts[0] += confusion(post_warmup(mutual, window), ds1, cadence);
    counts[1] += confusion(post_warmup(confirmatory, window), ds1, cadence);
    counts[2] += confusion(post_warmup(language, window), ds1, cadence);
    std::vector<TickPrediction> fused;
    for (const auto& d : batch_decisions(ds1, forest, window)) fused.push_back({d.frame.t, d.vote.label});
    counts[3] += confusion(fused, ds1, cadence);
  }
  return counts;
}

}  // namespace

EvaluationReport run_full_eval(std::span<const SessionRecord> ds0, const EvalConfig& config) {
  validate(config.pipeline);
  validate(config.forest);
  const auto folds = kfold(ds0.size(), config.folds, config.seed);

  std::vector<FoldCounts> per_fold(folds.size());
  if (config.parallel) {
    std::vector<std::future<FoldCounts>> pending;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      pending.push_back(std::async(std::launch::async, [&, f] { return run_fold(ds0, folds[f], f, config); }));
    }
    for (std::size_t f = 0; f < folds.size(); ++f) per_fold[f] = pending[f].get();
  } else {
    for (std::size_t f = 0; f < folds.size(); ++f) per_fold[f] = run_fold(ds0, folds[f], f, config);
  }

  FoldCounts total;
  for (const auto& counts : per_fold) {
    for (std::size_t m = 0; m < total.size(); ++m) total[m] += counts[m];
  }

  EvaluationReport report;
  report.sessions = ds0.size();
  report.folds = folds.size();
  report.seed = config.seed;
  for (std::size_t m = 0; m < total.size(); ++m) report.models[m] = metrics_from(total[m]);
  for (const auto& s : ds0) report.help.push_back({s.session_id, average_help(s)});
  std::sort(report.help.begin(), report.help.end(),
            [](const SessionHelp& a, const SessionHelp& b) { return a.session_id < b.session_id; });
  return report;
}

namespace {

std::string pad(std::string text, std::size_t width, bool right_align) {
  if (text.size() >= width) return text;
  const std::string fill(width - text.size(), ' ');
  return right_align ? fill + text : text + fill;
}

std::string ratio(double value, bool undefined) {
  return wire::format_fixed(value, 3) + (undefined ? "*" : " ");
}

}  // namespace

std::string format_table(const EvaluationReport& report) {
  std::string out;
  out += pad("model", 14, false) + pad("precision", 11, true) + pad("recall", 9, true) + pad("f1", 8, true) +
         pad("tp", 8, true) + pad("fp", 8, true) + pad("fn", 8, true) + pad("tn", 8, true) + "\n";
  bool any_undefined = false;
  for (auto kind : kAllModelKinds) {
    const auto& m = report[kind];
    any_undefined = any_undefined || m.precision_undefined || m.recall_undefined;
    out += pad(std::string(to_string(kind)), 14, false) + pad(ratio(m.precision, m.precision_undefined), 11, true) +
           pad(ratio(m.recall, m.recall_undefined), 9, true) + pad(wire::format_fixed(m.f1, 3) + " ", 8, true) +
           pad(std::to_string(m.counts.tp), 8, true) + pad(std::to_string(m.counts.fp), 8, true) +
           pad(std::to_string(m.counts.fn), 8, true) + pad(std::to_string(m.counts.tn), 8, true) + "\n";
  }
  if (any_undefined) out += "* undefined (zero denominator), reported as 0\n";
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  if (!report.help.empty()) {
    lo = hi = report.help.front().average_help;
    for (const auto& h : report.help) {
      mean += h.average_help;
      lo = std::min(lo, h.average_help);
      hi = std::max(hi, h.average_help);
    }
    mean /= static_cast<double>(report.help.size());
  }
  out += "sessions " + std::to_string(report.sessions) + ", folds " + std::to_string(report.folds) +
         ", average help mean " + wire::format_fixed(mean, 3) + " range " + wire::format_fixed(lo, 3) + " to " +
         wire::format_fixed(hi, 3) + "\n";
  return out;
}

std::string format_key_values(const EvaluationReport& report) {
  std::string out = "report sessions=" + std::to_string(report.sessions) + " folds=" + std::to_string(report.folds) +
                    " seed=" + std::to_string(report.seed) + "\n";
  for (auto kind : kAllModelKinds) {
    const auto& m = report[kind];
    std::string name(to_string(kind));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    out += "model name=" + name + " precision=" + wire::format_fixed(m.precision, wire::kValueDecimals) +
           " recall=" + wire::format_fixed(m.recall, wire::kValueDecimals) +
           " f1=" + wire::format_fixed(m.f1, wire::kValueDecimals) + " tp=" + std::to_string(m.counts.tp) +
           " fp=" + std::to_string(m.counts.fp) + " fn=" + std::to_string(m.counts.fn) +
           " tn=" + std::to_string(m.counts.tn) + " precision_undefined=" + (m.precision_undefined ? "1" : "0") +
           " recall_undefined=" + (m.recall_undefined ? "1" : "0") + "\n";
  }
  for (const auto& h : report.help) {
    out += "average_help session=" + h.session_id + " value=" + wire::format_fixed(h.average_help, wire::kValueDecimals) +
           "\n";
  }
  return out;
}

}  // namespace helpsense
