#pragma once

// Utterance classifier: tokenizer, bag-of-words features with aggregate
// question-word and negation counts, and a multinomial naive Bayes model.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helpsense/stream.hpp"

namespace helpsense {

/// Reserved feature names. Natural tokens never contain '_', so these cannot collide.
inline constexpr std::string_view kQuestionFeature = "__QWORD__";
inline constexpr std::string_view kNegationFeature = "__NEG__";

/// Lowercases and splits on anything but letters, digits and apostrophes
/// between two word characters. Bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

bool is_question_word(std::string_view token);
bool is_negation(std::string_view token);

using TokenCounts = std::map<std::string, std::uint64_t, std::less<>>;

struct UtteranceFeatures {
  TokenCounts counts;

  bool operator==(const UtteranceFeatures&) const = default;
};

/// Token counts, plus QWORD/NEG aggregates when `aggregates` is set. The
/// matched words are also kept as ordinary tokens.
UtteranceFeatures extract_features(std::span<const std::string> tokens, bool aggregates = true);

struct LabeledFeatures {
  UtteranceFeatures features;
  int label = 0;
};

inline constexpr int kNoHelp = 0;
inline constexpr int kHelp = 1;

class NaiveBayesModel {
 public:
  /// Add-alpha smoothed multinomial model over every token seen in training.
  /// Throws ModelError unless both classes are present and alpha > 0.
  static NaiveBayesModel train(std::span<const LabeledFeatures> corpus, double alpha = 1.0,
                               bool aggregates = true);

  /// Posterior (no-help, help) computed in log space. Tokens outside the
  /// vocabulary are ignored.
  std::array<double, 2> posterior(const UtteranceFeatures& features) const;
  double predict(const UtteranceFeatures& features) const { return posterior(features)[kHelp]; }

  /// Need value of a raw utterance; empty when it has no tokens.
  std::optional<double> need(std::string_view text) const;

  double alpha() const { return alpha_; }
  bool aggregates() const { return aggregates_; }
  double prior(int cls) const;
  /// Smoothed P(token | class); 0 for tokens outside the vocabulary.
  double likelihood(std::string_view token, int cls) const;
  std::size_t vocabulary_size() const { return counts_.size(); }
  std::uint64_t documents(int cls) const { return documents_.at(cls); }
  std::uint64_t token_total(int cls) const { return totals_.at(cls); }
  const std::map<std::string, std::array<std::uint64_t, 2>, std::less<>>& counts() const { return counts_; }

  /// Text form holding alpha, per-class document counts and per-class token
  /// counts; likelihoods are recomputed on load.
  std::string serialize() const;
  static NaiveBayesModel parse(std::string_view text, const std::string& origin = "<nb model>");

  bool operator==(const NaiveBayesModel&) const = default;

 private:
  void finalize();

  double alpha_ = 1.0;
  bool aggregates_ = true;
  std::array<std::uint64_t, 2> documents_{};
  std::array<std::uint64_t, 2> totals_{};
  std::map<std::string, std::array<std::uint64_t, 2>, std::less<>> counts_;
  std::array<double, 2> log_prior_{};
  std::array<double, 2> log_denominator_{};
};

/// Wires utterance -> need_language. Utterances without tokens are dropped.
Stream<double>& wire_language(Pipeline& pipeline, Stream<std::string>& utterances,
                              const NaiveBayesModel& model);

}  // namespace helpsense
