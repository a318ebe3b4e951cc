#include "exportcast/boosting.hpp"

#include <algorithm>

namespace exportcast {

namespace {

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  double n0 = 0.0;
  double n1 = 0.0;
};

struct SplitChoice {
  bool found = false;
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct ScanState {
  double g = 0.0;
  double h = 0.0;
  double last = 0.0;
  bool seen = false;
};

}  // namespace

Tree fit_regression_tree(const FeatureBlock& features, std::span<const double> grad,
                         std::span<const double> hess,
                         std::span<const std::uint8_t> labels,
                         const BoostedParams& params) {
  const std::size_t n = features.rows();
  if (n == 0) throw ValidationError("cannot fit a tree on an empty set");
  const double lambda = params.l2;
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };

  std::vector<TreeNode> nodes(1);
  std::vector<NodeStats> stats(1);
  std::vector<std::int32_t> position(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    stats[0].g += grad[r];
    stats[0].h += hess[r];
    (labels[r] ? stats[0].n1 : stats[0].n0) += 1.0;
  }

  std::vector<std::int32_t> frontier{0};
  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    // Dense per-node slots for the frontier.
    std::vector<std::int32_t> slot(nodes.size(), -1);
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      slot[static_cast<std::size_t>(frontier[i])] = static_cast<std::int32_t>(i);
    }
    std::vector<SplitChoice> best(frontier.size());
    std::vector<ScanState> scan(frontier.size());
    for (std::size_t f = 0; f < features.cols(); ++f) {
      const auto col = features.x().col(static_cast<Eigen::Index>(f));
      std::fill(scan.begin(), scan.end(), ScanState{});
      for (std::uint32_t r : features.sorted(f)) {
        const std::int32_t s = slot[static_cast<std::size_t>(position[r])];
        if (s < 0) continue;
        ScanState& st = scan[static_cast<std::size_t>(s)];
        const double x = col(r);
        if (st.seen && x > st.last) {
          const NodeStats& total = stats[static_cast<std::size_t>(frontier[static_cast<std::size_t>(s)])];
          const double gr = total.g - st.g;
          const double hr = total.h - st.h;
          if (st.h >= params.min_child_weight && hr >= params.min_child_weight) {
            const double gain =
                0.5 * (score(st.g, st.h) + score(gr, hr) - score(total.g, total.h));
            SplitChoice& b = best[static_cast<std::size_t>(s)];
            if (gain > b.gain) {
              b = {true, static_cast<std::int32_t>(f), split_midpoint(st.last, x), gain};
            }
          }
        }
        st.g += grad[r];
        st.h += hess[r];
        st.last = x;
        st.seen = true;
      }
    }

    std::vector<std::int32_t> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (!best[i].found) continue;
      const std::int32_t id = frontier[i];
      const auto left = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      stats.emplace_back();
      stats.emplace_back();
      TreeNode& node = nodes[static_cast<std::size_t>(id)];
      node.feature = best[i].feature;
      node.threshold = best[i].threshold;
      node.left = left;
      node.right = left + 1;
      node.gain = best[i].gain;
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) break;
    for (std::size_t r = 0; r < n; ++r) {
      const TreeNode& node = nodes[static_cast<std::size_t>(position[r])];
      if (node.is_leaf()) continue;
      const std::int32_t child =
          features.x()(static_cast<Eigen::Index>(r), node.feature) <= node.threshold
              ? node.left
              : node.right;
      position[r] = child;
      NodeStats& cs = stats[static_cast<std::size_t>(child)];
      cs.g += grad[r];
      cs.h += hess[r];
      (labels[r] ? cs.n1 : cs.n0) += 1.0;
    }
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].n_zero = stats[i].n0;
    nodes[i].n_one = stats[i].n1;
    nodes[i].value = -stats[i].g / (stats[i].h + lambda);
  }
  return Tree(std::move(nodes));
}

double mean_log_loss(std::span<const double> probability,
                     std::span<const std::uint8_t> labels) {
  constexpr double kEps = 1e-15;
  double sum = 0.0;
  for (std::size_t i = 0; i < probability.size(); ++i) {
    const double p = std::clamp(probability[i], kEps, 1.0 - kEps);
    sum -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return sum / static_cast<double>(probability.size());
}

BoostedModel fit_boosted(const SupervisedSet& set, const BoostedParams& params) {
  if (set.size() == 0) throw ValidationError("cannot fit boosting on an empty set");
  if (!(params.base_score > 0.0 && params.base_score < 1.0)) {
    throw ValidationError("base_score must lie in (0, 1)");
  }
  if (params.l2 < 0.0 || params.learning_rate <= 0.0) {
    throw ValidationError("l2 must be >= 0 and learning_rate > 0");
  }
  BoostedModel model;
  model.params = params;
  model.num_features = set.features->cols();
  const std::size_t n = set.size();
  const std::span<const std::uint8_t> labels(set.labels.data(), n);
  const Matrix& x = set.x();

  std::vector<double> margin(n, logit(params.base_score));
  std::vector<double> prob(n);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  auto refresh = [&] {
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(margin[i]);
  };
  refresh();
  model.training_loss.push_back(mean_log_loss(prob, labels));

  const auto positives = static_cast<std::size_t>(set.labels.cast<int>().sum());
  if (positives == 0 || positives == n) return model;

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = prob[i] - labels[i];
      hess[i] = prob[i] * (1.0 - prob[i]);
    }
    Tree tree = fit_regression_tree(*set.features, grad, hess, labels, params);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += params.learning_rate * tree.predict(x.row(static_cast<Eigen::Index>(i)));
    }
    model.trees.push_back(std::move(tree));
    refresh();
    model.training_loss.push_back(mean_log_loss(prob, labels));
  }
  return model;
}

}  // namespace exportcast
