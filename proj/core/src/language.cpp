#include "helpsense/language.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpsense/wire.hpp"

namespace helpsense {

namespace {

bool word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

constexpr std::string_view kQuestionWords[] = {"what", "who", "which", "where", "when", "how", "why"};
constexpr std::string_view kNegations[] = {"no",     "not",     "none",     "nothing",   "isn't",
                                           "aren't", "don't",   "won't",    "wasn't",    "weren't",
                                           "wouldn't", "shouldn't", "couldn't", "can't"};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (word_char(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if (c == '\'' && !current.empty() && i + 1 < text.size() &&
               word_char(static_cast<unsigned char>(text[i + 1]))) {
      current += '\'';
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool is_question_word(std::string_view token) {
  return std::find(std::begin(kQuestionWords), std::end(kQuestionWords), token) != std::end(kQuestionWords);
}

bool is_negation(std::string_view token) {
  return std::find(std::begin(kNegations), std::end(kNegations), token) != std::end(kNegations);
}

UtteranceFeatures extract_features(std::span<const std::string> tokens, bool aggregates) {
  UtteranceFeatures features;
  std::uint64_t questions = 0;
  std::uint64_t negations = 0;
  for (const auto& token : tokens) {
    ++features.counts[token];
    questions += is_question_word(token);
    negations += is_negation(token);
  }
  if (aggregates) {
    features.counts[std::string(kQuestionFeature)] = questions;
    features.counts[std::string(kNegationFeature)] = negations;
  }
  return features;
}

NaiveBayesModel NaiveBayesModel::train(std::span<const LabeledFeatures> corpus, double alpha, bool aggregates) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ModelError("naive Bayes alpha must be > 0");
  NaiveBayesModel model;
  model.alpha_ = alpha;
  model.aggregates_ = aggregates;
  for (const auto& doc : corpus) {
    if (doc.label != kNoHelp && doc.label != kHelp) throw ModelError("labels must be 0 or 1");
    ++model.documents_[doc.label];
    for (const auto& [token, count] : doc.features.counts) {
      auto& slot = model.counts_[token];
      slot[doc.label] += count;
      model.totals_[doc.label] += count;
    }
  }
  std::string missing;
  for (int cls : {kHelp, kNoHelp}) {
    if (model.documents_[cls] == 0) {
      missing += missing.empty() ? "" : " and ";
      missing += cls == kHelp ? "help (label 1)" : "no-help (label 0)";
    }
  }
  if (!missing.empty()) {
    throw ModelError("language training corpus has no " + missing + " utterances; supply both classes");
  }
  model.finalize();
  return model;
}

void NaiveBayesModel::finalize() {
  const double n = static_cast<double>(documents_[0] + documents_[1]);
  const double vocab = static_cast<double>(counts_.size());
  for (int cls : {kNoHelp, kHelp}) {
    log_prior_[cls] = std::log(static_cast<double>(documents_[cls]) / n);
    log_denominator_[cls] = std::log(static_cast<double>(totals_[cls]) + alpha_ * vocab);
  }
}

double NaiveBayesModel::prior(int cls) const {
  return static_cast<double>(documents_.at(cls)) / static_cast<double>(documents_[0] + documents_[1]);
}

double NaiveBayesModel::likelihood(std::string_view token, int cls) const {
  auto it = counts_.find(token);
  if (it == counts_.end()) return 0.0;
  return (static_cast<double>(it->second[cls]) + alpha_) /
         (static_cast<double>(totals_.at(cls)) + alpha_ * static_cast<double>(counts_.size()));
}

std::array<double, 2> NaiveBayesModel::posterior(const UtteranceFeatures& features) const {
  std::array<double, 2> log_score = log_prior_;
  for (const auto& [token, count] : features.counts) {
    if (count == 0) continue;
    auto it = counts_.find(token);
    if (it == counts_.end()) continue;
    for (int cls : {kNoHelp, kHelp}) {
      log_score[cls] += static_cast<double>(count) *
                        (std::log(static_cast<double>(it->second[cls]) + alpha_) - log_denominator_[cls]);
    }
  }
  const double top = std::max(log_score[0], log_score[1]);
  const double e0 = std::exp(log_score[0] - top);
  const double e1 = std::exp(log_score[1] - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::optional<double> NaiveBayesModel::need(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) return std::nullopt;
  return predict(extract_features(tokens, aggregates_));
}

std::string NaiveBayesModel::serialize() const {
  std::string out = "nb_model version=1 alpha=" + wire::format_exact(alpha_) +
                    " aggregates=" + (aggregates_ ? "1" : "0") + "\n";
  for (int cls : {kNoHelp, kHelp}) {
    out += "class label=" + std::to_string(cls) + " documents=" + std::to_string(documents_[cls]) + "\n";
  }
  for (const auto& [token, c] : counts_) {
    out += "token text=" + wire::quote(token) + " c0=" + std::to_string(c[0]) + " c1=" + std::to_string(c[1]) + "\n";
  }
  return out;
}

NaiveBayesModel NaiveBayesModel::parse(std::string_view text, const std::string& origin) {
  NaiveBayesModel model;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::array<bool, 2> have_class{};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const std::string_view view(line);
      const auto begin = view.find_first_not_of(" \t");
      const auto space = view.find_first_of(" \t", begin);
      const std::string kind(view.substr(begin, space == std::string_view::npos ? view.npos : space - begin));
      wire::FieldSet rest(wire::split_fields(space == std::string_view::npos ? std::string_view{} : view.substr(space)));
      if (kind == "nb_model") {
        rest.expect_only({"version", "alpha", "aggregates"});
        if (wire::parse_int(rest.get("version")) != 1) throw std::invalid_argument("unsupported version");
        model.alpha_ = rest.number("alpha");
        model.aggregates_ = wire::parse_bool(rest.get("aggregates"));
        if (!(model.alpha_ > 0.0)) throw std::invalid_argument("alpha must be > 0");
        have_header = true;
      } else if (!have_header) {
        throw std::invalid_argument("first record must be nb_model");
      } else if (kind == "class") {
        rest.expect_only({"label", "documents"});
        const auto cls = wire::parse_int(rest.get("label"));
        if (cls != 0 && cls != 1) throw std::invalid_argument("class label must be 0 or 1");
        model.documents_[cls] = wire::parse_uint(rest.get("documents"));
        have_class[cls] = true;
      } else if (kind == "token") {
        rest.expect_only({"text", "c0", "c1"});
        const std::array<std::uint64_t, 2> c{wire::parse_uint(rest.get("c0")), wire::parse_uint(rest.get("c1"))};
        if (!model.counts_.emplace(rest.get("text"), c).second) {
          throw std::invalid_argument("duplicate token " + rest.get("text"));
        }
        model.totals_[0] += c[0];
        model.totals_[1] += c[1];
      } else {
        throw std::invalid_argument("unknown record " + kind);
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
  if (!have_header || !have_class[0] || !have_class[1]) throw ParseError(origin, 0, "incomplete model");
  if (model.documents_[0] == 0 || model.documents_[1] == 0) throw ParseError(origin, 0, "model lacks a class");
  model.finalize();
  return model;
}

Stream<double>& wire_language(Pipeline& pipeline, Stream<std::string>& utterances, const NaiveBayesModel& model) {
  return pipeline.map(
      utterances, [&model](const std::string& text) { return model.need(text); }, StreamId::NeedLanguage);
}

}  // namespace helpsense
