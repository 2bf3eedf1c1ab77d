#pragma once

// Per-tick binary metrics, session-level k-fold cross validation and the
// weighted average-help statistic.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "helpsense/forest.hpp"
#include "helpsense/fusion.hpp"
#include "helpsense/session.hpp"

namespace helpsense {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  void add(int predicted, int truth);
  std::size_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& other);
  bool operator==(const Confusion&) const = default;
};

/// Undefined ratios (zero denominators) are reported as 0 with the flag set.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion counts;
  bool precision_undefined = false;
  bool recall_undefined = false;

  bool operator==(const Metrics&) const = default;
};

Metrics metrics_from(const Confusion& counts);

struct TickPrediction {
  Seconds t = 0.0;
  int label = 0;
};

/// Compares each prediction with the binary label at its tick. Every
/// prediction must sit on the record's tick grid at `cadence`, in strictly
/// increasing order; otherwise DataError.
Confusion confusion(std::span<const TickPrediction> predictions, const SessionRecord& record, double cadence);
Metrics evaluate(std::span<const TickPrediction> predictions, const SessionRecord& record, double cadence);

constexpr double kNeedThreshold = 0.5;

/// Binarizes a need stream (positive when value >= threshold) and evaluates it.
std::vector<TickPrediction> binarize(std::span<const Message<double>> need, double threshold = kNeedThreshold);
Metrics threshold_model_eval(std::span<const Message<double>> need, const SessionRecord& record, double cadence,
                             double threshold = kNeedThreshold);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles indices 0..n-1 with `seed` and deals them round-robin into k test
/// folds. Throws std::invalid_argument if k < 2 or n < k.
std::vector<Fold> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

/// Sum of help_weight(level) * span length over the session duration.
double average_help(const SessionRecord& record);

struct EvalConfig {
  PipelineConfig pipeline;
  double nb_alpha = 1.0;
  bool nb_aggregates = true;
  ForestConfig forest;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  bool parallel = false;
  /// Applied to every DS1 session (train and test) after materialization.
  std::function<void(SessionRecord&)> adjust_ds1;
};

enum class ModelKind { Mutual, Confirmatory, Language, Fusion };
inline constexpr std::array<ModelKind, 4> kAllModelKinds = {ModelKind::Mutual, ModelKind::Confirmatory,
                                                            ModelKind::Language, ModelKind::Fusion};
std::string_view to_string(ModelKind kind);

struct SessionHelp {
  std::string session_id;
  double average_help = 0.0;
};

struct EvaluationReport {
  std::size_t sessions = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::array<Metrics, 4> models;  // indexed by ModelKind
  std::vector<SessionHelp> help;  // sorted by session id

  const Metrics& operator[](ModelKind kind) const { return models[static_cast<std::size_t>(kind)]; }
};

/// Cross-validated evaluation. For each fold the language model is trained
/// on the training sessions, both sides are rematerialized with it, and the
/// forest is trained on the training DS1. All four models are scored on the
/// same post-warm-up ticks of the test sessions; confusion counts are summed
/// across folds. Every session is a test session exactly once, so the gaze
/// rows cover the whole corpus.
EvaluationReport run_full_eval(std::span<const SessionRecord> ds0, const EvalConfig& config);

std::string format_table(const EvaluationReport& report);
std::string format_key_values(const EvaluationReport& report);

}  // namespace helpsense
