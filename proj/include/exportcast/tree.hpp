#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exportcast/dataset.hpp"

namespace exportcast {

// Flat binary tree node. Internal nodes route `x[feature] <= threshold` to
// `left`, everything else to `right`. Leaves have left == right == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  // Training class counts reaching the node (bootstrap multiplicities
  // included).
  double n_zero = 0.0;
  double n_one = 0.0;
  // Classification trees: positive fraction. Boosting trees: raw leaf weight.
  double value = 0.0;
  // Impurity (or loss) reduction credited to `feature` by this split.
  double gain = 0.0;

  bool is_leaf() const { return left < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& root() const { return nodes_.front(); }

  template <typename Row>
  const TreeNode& leaf_for(const Row& x) const {
    std::int32_t id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
      const TreeNode& n = nodes_[static_cast<std::size_t>(id)];
      id = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(id)];
  }

  template <typename Row>
  double predict(const Row& x) const {
    return leaf_for(x).value;
  }

  // Adds each split's gain to `totals[feature]`.
  void accumulate_gain(std::span<double> totals) const;
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = -1;  // negative: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0: all features
  std::uint64_t seed = 0;
};

// Greedy CART on Gini impurity. `weights` are non-negative integer sample
// multiplicities (bootstrap counts); rows with weight 0 are ignored.
// Candidate thresholds are midpoints between consecutive distinct values.
// Ties go to the lowest feature index, then the lowest threshold.
Tree fit_tree(const FeatureBlock& features, std::span<const std::uint8_t> labels,
              std::span<const std::uint32_t> weights, const TreeParams& params);
Tree fit_tree(const SupervisedSet& set, const TreeParams& params);

// Threshold placed between two consecutive distinct sorted values.
inline double split_midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

struct DotStyle {
  std::string zero_color = "#e58139";  // many zeros
  std::string one_color = "#399de5";   // many ones
  int precision = 4;
};

// Graphviz digraph: internal nodes show feature name and threshold, every
// node shows its class counts, fill shade follows the class balance, and the
// left edge is labelled "≤ threshold".
std::string export_tree_dot(const Tree& tree,
                            const std::vector<std::string>& feature_names,
                            const DotStyle& style = {});

}  // namespace exportcast
