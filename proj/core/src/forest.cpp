#include "helpsense/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "helpsense/wire.hpp"

namespace helpsense {

void validate(const ForestConfig& config) {
  if (config.n_trees < 1) throw std::invalid_argument("forest needs n_trees >= 1");
  if (config.min_samples_leaf < 1) throw std::invalid_argument("forest needs min_samples_leaf >= 1");
  if (config.features_per_split && *config.features_per_split < 1) {
    throw std::invalid_argument("forest needs features_per_split >= 1");
  }
}

std::size_t features_per_split(const ForestConfig& config, std::size_t dimension) {
  std::size_t m = config.features_per_split.value_or(
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dimension)))));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(dimension, 1));
}

int DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.is_leaf()) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

namespace {

using Weights = std::array<std::uint64_t, 2>;
__extension__ using u128 = unsigned __int128;

// Distinct feature vectors in canonical order, stored column-major.
struct Dataset {
  std::size_t dimension = 0;
  std::size_t unique_rows = 0;
  std::vector<std::vector<double>> columns;
  std::vector<std::uint32_t> unique_of_row;  // canonical row -> distinct vector
  std::vector<int> labels;                   // canonical row -> label
};

Dataset prepare(const TrainingMatrix& matrix) {
  const auto& rows = matrix.rows;
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = rows[a];
    const auto& rb = rows[b];
    if (ra.session_id != rb.session_id) return ra.session_id < rb.session_id;
    if (ra.anchor_t != rb.anchor_t) return ra.anchor_t < rb.anchor_t;
    if (ra.features != rb.features) return ra.features < rb.features;
    return ra.label < rb.label;
  });
  Dataset data;
  data.dimension = matrix.dimension;
  data.columns.resize(data.dimension);
  std::map<std::vector<double>, std::uint32_t> ids;
  for (auto i : order) {
    const auto& row = rows[i];
    auto [it, inserted] = ids.emplace(row.features, static_cast<std::uint32_t>(ids.size()));
    if (inserted) {
      for (std::size_t f = 0; f < data.dimension; ++f) data.columns[f].push_back(row.features[f]);
    }
    data.unique_of_row.push_back(it->second);
    data.labels.push_back(row.label);
  }
  data.unique_rows = ids.size();
  return data;
}

struct Split {
  u128 numerator = 0;  // sum over children of (c0^2 + c1^2) / n, as a fraction
  u128 denominator = 1;
  std::int32_t feature = TreeNode::kLeaf;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<Weights>& weights, const ForestConfig& config,
              std::mt19937_64& rng)
      : data_(data),
        weights_(weights),
        config_(config),
        rng_(rng),
        per_split_(features_per_split(config, data.dimension)) {
    permutation_.resize(data.dimension);
  }

  DecisionTree build() {
    for (std::uint32_t u = 0; u < weights_.size(); ++u) {
      if (weights_[u][0] + weights_[u][1] > 0) samples_.push_back(u);
    }
    grow(0, samples_.size(), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  Weights totals(std::size_t begin, std::size_t end) const {
    Weights w{};
    for (std::size_t i = begin; i < end; ++i) {
      w[0] += weights_[samples_[i]][0];
      w[1] += weights_[samples_[i]][1];
    }
    return w;
  }

  bool constant(std::size_t feature, std::size_t begin, std::size_t end) const {
    const auto& col = data_.columns[feature];
    const double first = col[samples_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (col[samples_[i]] != first) return false;
    }
    return true;
  }

  // Draws features in random order until `per_split_` non-constant ones are
  // found or every feature has been tried.
  std::vector<std::size_t> choose_features(std::size_t begin, std::size_t end) {
    std::iota(permutation_.begin(), permutation_.end(), 0);
    std::vector<std::size_t> chosen;
    for (std::size_t j = 0; j < permutation_.size() && chosen.size() < per_split_; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, permutation_.size() - 1);
      std::swap(permutation_[j], permutation_[pick(rng_)]);
      if (!constant(permutation_[j], begin, end)) chosen.push_back(permutation_[j]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  void evaluate(std::size_t feature, std::size_t begin, std::size_t end, const Weights& node, Split& best) {
    const auto& col = data_.columns[feature];
    scratch_.clear();
    for (std::size_t i = begin; i < end; ++i) scratch_.push_back({col[samples_[i]], samples_[i]});
    std::sort(scratch_.begin(), scratch_.end());
    const std::uint64_t n = node[0] + node[1];
    const std::uint64_t min_leaf = config_.min_samples_leaf;
    Weights left{};
    for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
      const auto& w = weights_[scratch_[i].second];
      left[0] += w[0];
      left[1] += w[1];
      const double lo = scratch_[i].first;
      const double hi = scratch_[i + 1].first;
      if (!(lo < hi)) continue;
      const std::uint64_t nl = left[0] + left[1];
      const std::uint64_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const Weights right{node[0] - left[0], node[1] - left[1]};
      const u128 sl = u128(left[0]) * left[0] + u128(left[1]) * left[1];
      const u128 sr = u128(right[0]) * right[0] + u128(right[1]) * right[1];
      const u128 numerator = sl * nr + sr * nl;
      const u128 denominator = u128(nl) * nr;
      // Strictly better only: earlier (lower feature, lower threshold) wins ties.
      if (best.feature == TreeNode::kLeaf || numerator * best.denominator > best.numerator * denominator) {
        double threshold = lo / 2 + hi / 2;
        if (!(threshold < hi)) threshold = lo;
        best = Split{numerator, denominator, static_cast<std::int32_t>(feature), threshold};
      }
    }
  }

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const Weights node = totals(begin, end);
    TreeNode leaf;
    leaf.label = node[1] >= node[0] ? 1 : 0;

    const bool pure = node[0] == 0 || node[1] == 0;
    const bool too_deep = config_.max_depth && depth >= *config_.max_depth;
    const bool too_small = node[0] + node[1] < 2 * config_.min_samples_leaf;
    if (pure || too_deep || too_small || end - begin < 2) {
      nodes_[static_cast<std::size_t>(index)] = leaf;
      return index;
    }

    Split best;
    for (auto feature : choose_features(begin, end)) evaluate(feature, begin, end, node, best);
    if (best.feature == TreeNode::kLeaf) {
      nodes_[static_cast<std::size_t>(index)] = leaf;
      return index;
    }

    const auto& col = data_.columns[static_cast<std::size_t>(best.feature)];
    const double threshold = best.threshold;
    auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](std::uint32_t u) { return col[u] <= threshold; });
    const auto split_at = static_cast<std::size_t>(mid - samples_.begin());

    TreeNode split;
    split.feature = best.feature;
    split.threshold = threshold;
    nodes_[static_cast<std::size_t>(index)] = split;
    const auto left = grow(begin, split_at, depth + 1);
    const auto right = grow(split_at, end, depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  const Dataset& data_;
  const std::vector<Weights>& weights_;
  const ForestConfig& config_;
  std::mt19937_64& rng_;
  std::size_t per_split_;
  std::vector<std::uint32_t> samples_;
  std::vector<std::size_t> permutation_;
  std::vector<std::pair<double, std::uint32_t>> scratch_;
  std::vector<TreeNode> nodes_;
};

std::mt19937_64 tree_generator(std::uint64_t seed, std::size_t tree) {
  const auto t = static_cast<std::uint64_t>(tree);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomForest RandomForest::train(const TrainingMatrix& matrix, const ForestConfig& config) {
  validate(config);
  if (matrix.rows.empty()) throw ModelError("fusion training matrix is empty");
  if (matrix.dimension == 0) throw ModelError("fusion training matrix has dimension 0");
  std::array<std::size_t, 2> classes{};
  for (const auto& row : matrix.rows) {
    if (row.features.size() != matrix.dimension) throw ModelError("training rows have unequal dimensions");
    if (row.label != 0 && row.label != 1) throw ModelError("training labels must be 0 or 1");
    ++classes[static_cast<std::size_t>(row.label)];
  }
  if (classes[0] == 0 || classes[1] == 0) {
    throw ModelError("fusion training matrix holds a single class; both are required");
  }

  const Dataset data = prepare(matrix);
  const std::size_t n = data.labels.size();
  RandomForest forest;
  forest.config_ = config;
  forest.dimension_ = matrix.dimension;
  forest.trees_.reserve(config.n_trees);
  std::vector<Weights> weights(data.unique_rows);
  for (std::size_t tree = 0; tree < config.n_trees; ++tree) {
    auto rng = tree_generator(config.seed, tree);
    std::fill(weights.begin(), weights.end(), Weights{});
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = draw(rng);
        ++weights[data.unique_of_row[row]][static_cast<std::size_t>(data.labels[row])];
      }
    } else {
      for (std::size_t row = 0; row < n; ++row) {
        ++weights[data.unique_of_row[row]][static_cast<std::size_t>(data.labels[row])];
      }
    }
    forest.trees_.push_back(TreeBuilder(data, weights, config, rng).build());
  }
  return forest;
}

ForestVote RandomForest::predict(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw ModelError("feature vector has dimension " + std::to_string(x.size()) + ", forest expects " +
                     std::to_string(dimension_));
  }
  ForestVote vote;
  for (const auto& tree : trees_) vote.votes += static_cast<std::size_t>(tree.predict(x));
  vote.score = static_cast<double>(vote.votes) / static_cast<double>(trees_.size());
  vote.label = 2 * vote.votes >= trees_.size() ? 1 : 0;
  return vote;
}

std::string RandomForest::serialize() const {
  std::string out = "forest version=1 dimension=" + std::to_string(dimension_) +
                    " n_trees=" + std::to_string(config_.n_trees) +
                    " max_depth=" + (config_.max_depth ? std::to_string(*config_.max_depth) : "none") +
                    " min_samples_leaf=" + std::to_string(config_.min_samples_leaf) + " features_per_split=" +
                    (config_.features_per_split ? std::to_string(*config_.features_per_split) : "auto") +
                    " bootstrap=" + (config_.bootstrap ? "1" : "0") + " seed=" + std::to_string(config_.seed) +
                    "\n";
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    out += "tree " + std::to_string(t) + "\n";
    const auto& nodes = trees_[t].nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      if (node.is_leaf()) {
        out += "leaf " + std::to_string(i) + " class=" + std::to_string(node.label) + "\n";
      } else {
        out += "node " + std::to_string(i) + " feat=" + std::to_string(node.feature) +
               " thr=" + wire::format_exact(node.threshold) + "\n";
      }
    }
  }
  return out;
}

namespace {

struct PendingNode {
  bool leaf;
  std::int32_t feature;
  double threshold;
  int label;
  std::size_t line;
};

// Rebuilds child links from a preorder listing; returns one past the subtree.
std::size_t link_preorder(std::vector<TreeNode>& nodes, const std::vector<PendingNode>& raw, std::size_t i,
                          const std::string& origin) {
  if (i >= raw.size()) throw ParseError(origin, raw.empty() ? 0 : raw.back().line, "truncated tree");
  const auto& r = raw[i];
  TreeNode& node = nodes[i];
  node.label = r.label;
  if (r.leaf) return i + 1;
  node.feature = r.feature;
  node.threshold = r.threshold;
  node.left = static_cast<std::int32_t>(i + 1);
  const std::size_t after_left = link_preorder(nodes, raw, i + 1, origin);
  node.right = static_cast<std::int32_t>(after_left);
  return link_preorder(nodes, raw, after_left, origin);
}

}  // namespace

RandomForest RandomForest::parse(std::string_view text, const std::string& origin) {
  RandomForest forest;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<PendingNode>> trees;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::istringstream words(line);
      std::string kind;
      words >> kind;
      std::string rest;
      std::getline(words, rest);
      if (kind == "forest") {
        wire::FieldSet f(wire::split_fields(rest));
        f.expect_only({"version", "dimension", "n_trees", "max_depth", "min_samples_leaf", "features_per_split",
                       "bootstrap", "seed"});
        if (wire::parse_int(f.get("version")) != 1) throw std::invalid_argument("unsupported forest version");
        forest.dimension_ = wire::parse_uint(f.get("dimension"));
        auto& c = forest.config_;
        c.n_trees = wire::parse_uint(f.get("n_trees"));
        if (f.get("max_depth") != "none") c.max_depth = wire::parse_uint(f.get("max_depth"));
        c.min_samples_leaf = wire::parse_uint(f.get("min_samples_leaf"));
        if (f.get("features_per_split") != "auto") c.features_per_split = wire::parse_uint(f.get("features_per_split"));
        c.bootstrap = wire::parse_bool(f.get("bootstrap"));
        c.seed = wire::parse_uint(f.get("seed"));
        validate(c);
        have_header = true;
      } else if (!have_header) {
        throw std::invalid_argument("first record must be the forest header");
      } else if (kind == "tree") {
        if (wire::parse_uint(std::string_view(rest).substr(rest.find_first_not_of(' '))) != trees.size()) {
          throw std::invalid_argument("trees out of order");
        }
        trees.emplace_back();
      } else if (kind == "node" || kind == "leaf") {
        if (trees.empty()) throw std::invalid_argument("node outside a tree");
        std::istringstream tail(rest);
        std::string id_text;
        tail >> id_text;
        if (wire::parse_uint(id_text) != trees.back().size()) throw std::invalid_argument("node ids not in preorder");
        std::string fields_text;
        std::getline(tail, fields_text);
        wire::FieldSet f(wire::split_fields(fields_text));
        PendingNode p{kind == "leaf", TreeNode::kLeaf, 0.0, 0, line_no};
        if (p.leaf) {
          f.expect_only({"class"});
          p.label = static_cast<int>(wire::parse_int(f.get("class")));
          if (p.label != 0 && p.label != 1) throw std::invalid_argument("leaf class must be 0 or 1");
        } else {
          f.expect_only({"feat", "thr"});
          const auto feature = wire::parse_uint(f.get("feat"));
          if (feature >= forest.dimension_) throw std::invalid_argument("feature index out of range");
          p.feature = static_cast<std::int32_t>(feature);
          p.threshold = f.number("thr");
        }
        trees.back().push_back(p);
      } else {
        throw std::invalid_argument("unknown record '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(origin, 0, "missing forest header");
  if (trees.size() != forest.config_.n_trees) throw ParseError(origin, 0, "tree count differs from header");
  for (const auto& raw : trees) {
    std::vector<TreeNode> nodes(raw.size());
    if (link_preorder(nodes, raw, 0, origin) != raw.size()) {
      throw ParseError(origin, raw.back().line, "tree has trailing nodes");
    }
    forest.trees_.emplace_back(std::move(nodes));
  }
  return forest;
}

}  // namespace helpsense
