#pragma once

// Random forest of axis-aligned Gini trees.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helpsense/session.hpp"

namespace helpsense {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;           // unlimited when empty
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> features_per_split;  // ceil(sqrt(dimension)) when empty
  bool bootstrap = true;
  std::uint64_t seed = 0;

  bool operator==(const ForestConfig&) const = default;
};

void validate(const ForestConfig& config);
std::size_t features_per_split(const ForestConfig& config, std::size_t dimension);

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  int label = 0;

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

/// Nodes in preorder; node 0 is the root. Samples with x[feature] <= threshold go left.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  int predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct ForestVote {
  int label = 0;
  double score = 0.0;  // fraction of trees voting 1
  std::size_t votes = 0;
};

class RandomForest {
 public:
  /// Each tree sees a bootstrap resample (when enabled) drawn from a
  /// generator seeded by (seed, tree index) over rows in canonical
  /// (session_id, anchor_t) order, so row order does not matter. Best splits
  /// maximize Gini decrease over a random feature subset; ties go to the
  /// lowest feature index, then the lowest threshold. Throws ModelError on a
  /// single-class or ragged matrix.
  static RandomForest train(const TrainingMatrix& matrix, const ForestConfig& config);

  /// Label is 1 iff at least half the trees vote 1. Throws ModelError on a
  /// dimension mismatch.
  ForestVote predict(std::span<const double> x) const;

  const ForestConfig& config() const { return config_; }
  std::size_t dimension() const { return dimension_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  std::string serialize() const;
  static RandomForest parse(std::string_view text, const std::string& origin = "<forest>");

  bool operator==(const RandomForest&) const = default;

 private:
  ForestConfig config_;
  std::size_t dimension_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace helpsense
