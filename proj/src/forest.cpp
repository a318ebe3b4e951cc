#include "exportcast/forest.hpp"

#include <cmath>

namespace exportcast {

std::size_t resolve_max_features(std::size_t requested, std::size_t num_features) {
  if (requested == 0) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_features)))));
  }
  return std::min(requested, num_features);
}

ForestModel fit_forest(const SupervisedSet& set, const ForestParams& params) {
  if (set.size() == 0) throw ValidationError("cannot fit a forest on an empty set");
  ForestModel model;
  model.params = params;
  model.num_features = set.features->cols();
  model.trees.reserve(params.n_trees);
  const std::size_t n = set.size();
  const std::span<const std::uint8_t> labels(set.labels.data(), n);
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.max_features =
      resolve_max_features(params.max_features, set.features->cols());
  std::vector<std::uint32_t> weights(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, {t});
    Engine rng(tree_seed);
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0u);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) ++weights[pick(rng)];
    } else {
      std::fill(weights.begin(), weights.end(), 1u);
    }
    tree_params.seed = rng();
    model.trees.push_back(fit_tree(*set.features, labels, weights, tree_params));
  }
  return model;
}

}  // namespace exportcast
