#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "exportcast/boosting.hpp"
#include "exportcast/forest.hpp"
#include "exportcast/logistic.hpp"
#include "exportcast/tree.hpp"

namespace exportcast {

struct DecisionTreeModel {
  TreeParams params;
  std::size_t num_features = 0;
  Tree tree;
};

// Scores a product by its own RCA, squashed to [0, 1) with r / (1 + r).
struct RcaBenchmarkModel {
  std::size_t feature = 0;
  std::size_t num_features = 0;
};

inline double rca_score(double r) { return r / (1.0 + r); }

// Per-product classifier. New model families are added as alternatives here
// plus a branch in fit_model / predict_scores.
using Model = std::variant<DecisionTreeModel, ForestModel, BoostedModel,
                           LogisticModel, RcaBenchmarkModel>;

enum class ModelKind { kTree, kForest, kBoosted, kLogistic, kRcaBenchmark };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kForest;
  std::string name;  // label used in reports; defaults to the kind
  TreeParams tree;
  ForestParams forest;
  BoostedParams boosted;
  LogisticParams logistic;

  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }
};

// `seed` overrides the seed inside the spec's parameters so that per-unit
// seeds can be derived by the caller.
Model fit_model(const ModelSpec& spec, const SupervisedSet& set, std::uint64_t seed);

std::size_t input_dimension(const Model& model);

// One score per row of `x`, each in [0, 1].
Vector predict_scores(const Model& model, const Matrix& x);

// Forest and single trees: per-feature weighted Gini decrease, averaged over
// trees. Boosting: per-feature total split gain. Normalized to sum 1; a
// model without splits yields all zeros.
Vector feature_importance(const Model& model);

// Versioned JSON document; reloading reproduces scores bit for bit.
std::string serialize_model(const Model& model);
Model deserialize_model(std::string_view text);

struct ScoreMatrix {
  int year = 0;
  Matrix values;  // countries x products
};

ScoreMatrix rca_benchmark(const RcaMatrix& x_test);

// Scores produced by one fitted model for a subset of countries.
struct ScoreBlock {
  std::size_t product = 0;
  std::vector<std::size_t> countries;
  Vector scores;
  int fold = -1;  // -1 when not cross-validated
};

// Every (country, product) cell must be covered by exactly one block.
ScoreMatrix assemble_score_matrix(std::span<const ScoreBlock> blocks,
                                  const std::vector<std::string>& countries,
                                  const std::vector<std::string>& products,
                                  int year);

}  // namespace exportcast
