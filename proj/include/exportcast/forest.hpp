#pragma once

#include <cstdint>
#include <vector>

#include "exportcast/tree.hpp"

namespace exportcast {

struct ForestParams {
  std::size_t n_trees = 100;
  // 0 selects ceil(sqrt(P)); set to P for plain bagging.
  std::size_t max_features = 0;
  bool bootstrap = true;
  int max_depth = -1;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

struct ForestModel {
  ForestParams params;
  std::size_t num_features = 0;
  std::vector<Tree> trees;

  // Mean leaf score across trees.
  template <typename Row>
  double predict(const Row& x) const {
    if (trees.empty()) return 0.0;
    double sum = 0.0;
    for (const Tree& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
  }
};

std::size_t resolve_max_features(std::size_t requested, std::size_t num_features);

ForestModel fit_forest(const SupervisedSet& set, const ForestParams& params);

}  // namespace exportcast
