#include "exportcast/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace exportcast {

void Tree::accumulate_gain(std::span<double> totals) const {
  for (const TreeNode& n : nodes_) {
    if (!n.is_leaf()) totals[static_cast<std::size_t>(n.feature)] += n.gain;
  }
}

int Tree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    deepest = std::max(deepest, level[i]);
    if (!n.is_leaf()) {
      level[static_cast<std::size_t>(n.left)] = level[i] + 1;
      level[static_cast<std::size_t>(n.right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

using u128 = unsigned __int128;

// Sum of squared class counts divided by the node weight, kept as an exact
// fraction. Weighted child Gini is w - sum_children(q), so a larger q means
// purer children.
struct Purity {
  u128 num = 0;
  u128 den = 1;

  static Purity node(std::uint64_t n0, std::uint64_t n1) {
    return {u128(n0) * n0 + u128(n1) * n1, u128(n0 + n1)};
  }
  static Purity split(std::uint64_t l0, std::uint64_t l1, std::uint64_t r0,
                      std::uint64_t r1) {
    const u128 wl = l0 + l1;
    const u128 wr = r0 + r1;
    const u128 a = u128(l0) * l0 + u128(l1) * l1;
    const u128 b = u128(r0) * r0 + u128(r1) * r1;
    return {a * wr + b * wl, wl * wr};
  }
  bool greater_than(const Purity& o) const { return num * o.den > o.num * den; }
  double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

struct Candidate {
  bool found = false;
  std::int32_t feature = -1;
  double threshold = 0.0;
  Purity purity;
};

struct Entry {
  double x;
  std::uint32_t weight;
  std::uint8_t label;
};

class CartBuilder {
 public:
  CartBuilder(const FeatureBlock& features, std::span<const std::uint8_t> labels,
              std::span<const std::uint32_t> weights, const TreeParams& params)
      : features_(features),
        labels_(labels),
        weights_(weights),
        params_(params),
        rng_(params.seed),
        node_of_(features.rows(), -1) {}

  Tree build() {
    std::vector<std::uint32_t> rows;
    for (std::uint32_t r = 0; r < features_.rows(); ++r) {
      if (weights_[r] > 0) rows.push_back(r);
    }
    if (rows.empty()) throw ValidationError("cannot fit a tree on an empty set");
    nodes_.emplace_back();
    grow(0, std::move(rows), 0);
    return Tree(std::move(nodes_));
  }

 private:
  void grow(std::int32_t id, std::vector<std::uint32_t> rows, int depth) {
    std::uint64_t n0 = 0;
    std::uint64_t n1 = 0;
    for (std::uint32_t r : rows) (labels_[r] ? n1 : n0) += weights_[r];
    {
      TreeNode& node = nodes_[static_cast<std::size_t>(id)];
      node.n_zero = static_cast<double>(n0);
      node.n_one = static_cast<double>(n1);
      node.value = static_cast<double>(n1) / static_cast<double>(n0 + n1);
    }
    const std::uint64_t n = n0 + n1;
    if (n0 == 0 || n1 == 0) return;
    if (params_.max_depth >= 0 && depth >= params_.max_depth) return;
    if (n < 2 * params_.min_samples_leaf) return;

    const Purity parent = Purity::node(n0, n1);
    Candidate best;
    best.purity = parent;
    for (std::size_t f : candidate_features()) {
      scan_feature(id, rows, f, n0, n1, best);
    }
    if (!best.found) return;

    std::vector<std::uint32_t> left_rows;
    std::vector<std::uint32_t> right_rows;
    const auto col = features_.x().col(best.feature);
    for (std::uint32_t r : rows) {
      (col(r) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const auto left = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const auto right = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    node.gain = best.purity.value() - parent.value();
    grow(left, std::move(left_rows), depth + 1);
    grow(right, std::move(right_rows), depth + 1);
  }

  // Features examined at this node, ascending.
  std::vector<std::size_t> candidate_features() {
    const std::size_t p = features_.cols();
    std::vector<std::size_t> all(p);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::size_t m = params_.max_features;
    if (m == 0 || m >= p) return all;
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, p - 1);
      std::swap(all[i], all[pick(rng_)]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  void gather_sorted(std::int32_t id, const std::vector<std::uint32_t>& rows,
                     std::size_t f) {
    entries_.clear();
    const auto col = features_.x().col(static_cast<Eigen::Index>(f));
    const std::size_t total = features_.rows();
    // Filtering the presorted column beats sorting when the node holds a
    // large share of the rows.
    if (rows.size() * 16 >= total) {
      for (std::uint32_t r : rows) node_of_[r] = id;
      for (std::uint32_t r : features_.sorted(f)) {
        if (node_of_[r] == id) entries_.push_back({col(r), weights_[r], labels_[r]});
      }
    } else {
      for (std::uint32_t r : rows) entries_.push_back({col(r), weights_[r], labels_[r]});
      std::sort(entries_.begin(), entries_.end(),
                [](const Entry& a, const Entry& b) { return a.x < b.x; });
    }
  }

  void scan_feature(std::int32_t id, const std::vector<std::uint32_t>& rows,
                    std::size_t f, std::uint64_t n0, std::uint64_t n1,
                    Candidate& best) {
    gather_sorted(id, rows, f);
    const std::uint64_t min_leaf = params_.min_samples_leaf;
    std::uint64_t l0 = 0;
    std::uint64_t l1 = 0;
    for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
      (entries_[i].label ? l1 : l0) += entries_[i].weight;
      if (!(entries_[i].x < entries_[i + 1].x)) continue;
      const std::uint64_t nl = l0 + l1;
      const std::uint64_t nr = n0 + n1 - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const Purity q = Purity::split(l0, l1, n0 - l0, n1 - l1);
      if (q.greater_than(best.purity)) {
        best.found = true;
        best.feature = static_cast<std::int32_t>(f);
        best.threshold = split_midpoint(entries_[i].x, entries_[i + 1].x);
        best.purity = q;
      }
    }
  }

  const FeatureBlock& features_;
  std::span<const std::uint8_t> labels_;
  std::span<const std::uint32_t> weights_;
  TreeParams params_;
  Engine rng_;
  std::vector<std::int32_t> node_of_;
  std::vector<Entry> entries_;
  std::vector<TreeNode> nodes_;
};

std::string shade(const std::string& base, double intensity) {
  // Blend `base` (#rrggbb) with white.
  auto channel = [&](int offset) {
    const int c = std::stoi(base.substr(static_cast<std::size_t>(1 + offset), 2),
                            nullptr, 16);
    return static_cast<int>(std::lround(255.0 - intensity * (255.0 - c)));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", channel(0), channel(2),
                channel(4));
  return buf;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out;
}

}  // namespace

Tree fit_tree(const FeatureBlock& features, std::span<const std::uint8_t> labels,
              std::span<const std::uint32_t> weights, const TreeParams& params) {
  if (features.rows() == 0) {
    throw ValidationError("cannot fit a tree on an empty set");
  }
  if (labels.size() != features.rows() || weights.size() != features.rows()) {
    throw ValidationError("labels and weights must match the feature rows");
  }
  return CartBuilder(features, labels, weights, params).build();
}

Tree fit_tree(const SupervisedSet& set, const TreeParams& params) {
  if (set.size() == 0) throw ValidationError("cannot fit a tree on an empty set");
  std::vector<std::uint32_t> weights(set.size(), 1);
  return fit_tree(*set.features,
                  std::span<const std::uint8_t>(set.labels.data(), set.size()),
                  weights, params);
}

std::string export_tree_dot(const Tree& tree,
                            const std::vector<std::string>& feature_names,
                            const DotStyle& style) {
  std::ostringstream out;
  out.precision(style.precision);
  out << "digraph Tree {\n"
      << "  node [shape=box, style=\"filled, rounded\", fontname=\"helvetica\"];\n"
      << "  edge [fontname=\"helvetica\"];\n";
  const auto& nodes = tree.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    const double total = n.n_zero + n.n_one;
    const double ones = total > 0 ? n.n_one / total : 0.5;
    const std::string fill = ones >= 0.5
                                 ? shade(style.one_color, 2.0 * ones - 1.0)
                                 : shade(style.zero_color, 1.0 - 2.0 * ones);
    out << "  " << i << " [label=\"";
    if (!n.is_leaf()) {
      const auto f = static_cast<std::size_t>(n.feature);
      const std::string name =
          f < feature_names.size() ? feature_names[f] : "x" + std::to_string(f);
      out << dot_escape(name) << " \xE2\x89\xA4 " << n.threshold << "\\n";
    }
    out << "samples = " << total << "\\n[" << n.n_zero << ", " << n.n_one << "]";
    if (n.is_leaf()) out << "\\nscore = " << n.value;
    out << "\", fillcolor=\"" << fill << "\"];\n";
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    if (n.is_leaf()) continue;
    out << "  " << i << " -> " << n.left << " [label=\"\xE2\x89\xA4 "
        << n.threshold << "\"];\n";
    out << "  " << i << " -> " << n.right << " [label=\"> " << n.threshold
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace exportcast
