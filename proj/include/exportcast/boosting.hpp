#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "exportcast/tree.hpp"

namespace exportcast {

struct BoostedParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.3;
  int max_depth = 6;
  double l2 = 1.0;
  double min_child_weight = 1.0;
  double base_score = 0.5;
};

inline double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Second-order boosted ensemble on logistic loss. Tree leaves hold raw
// log-odds increments; the learning rate is applied when summing.
struct BoostedModel {
  BoostedParams params;
  std::size_t num_features = 0;
  std::vector<Tree> trees;
  // Mean training log-loss before the first round and after every round.
  std::vector<double> training_loss;

  template <typename Row>
  double margin(const Row& x) const {
    double sum = 0.0;
    for (const Tree& t : trees) sum += t.predict(x);
    return logit(params.base_score) + params.learning_rate * sum;
  }

  template <typename Row>
  double predict(const Row& x) const {
    return sigmoid(margin(x));
  }
};

// One regression tree on per-row gradients and hessians. Leaf weight is
// -G/(H + l2); a split is kept only when its gain is positive and both
// children carry at least `min_child_weight` hessian mass.
Tree fit_regression_tree(const FeatureBlock& features, std::span<const double> grad,
                         std::span<const double> hess,
                         std::span<const std::uint8_t> labels,
                         const BoostedParams& params);

// A training set with a single class yields an empty ensemble, i.e. the
// constant base_score.
BoostedModel fit_boosted(const SupervisedSet& set, const BoostedParams& params);

double mean_log_loss(std::span<const double> probability,
                     std::span<const std::uint8_t> labels);

}  // namespace exportcast
