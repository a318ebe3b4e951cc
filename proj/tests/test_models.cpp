#include <gtest/gtest.h>

#include <random>

#include "exportcast/boosting.hpp"
#include "exportcast/logistic.hpp"
#include "exportcast/model.hpp"
#include "oracles.hpp"

using namespace exportcast;
using oracles::make_set;

namespace {

SupervisedSet random_set(std::mt19937_64& rng, int n, int p, double signal = 1.0) {
  Matrix x(n, p);
  std::vector<int> y(static_cast<std::size_t>(n));
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < p; ++f) x(i, f) = std::abs(g(rng));
    y[static_cast<std::size_t>(i)] = signal * (x(i, 0) - 0.7) + g(rng) > 0;
  }
  return make_set(x, y);
}

}  // namespace

TEST(Boosting, ZeroRoundsGiveBaseScore) {
  std::mt19937_64 rng(1);
  const SupervisedSet s = random_set(rng, 20, 3);
  const BoostedModel m = fit_boosted(s, {.n_rounds = 0, .base_score = 0.2});
  const Vector scores = predict_scores(m, s.x());
  for (Eigen::Index i = 0; i < scores.size(); ++i) EXPECT_NEAR(scores(i), 0.2, 1e-15);
}

TEST(Boosting, SingleClassIsConstant) {
  Matrix x(5, 2);
  x.setRandom();
  const BoostedModel m = fit_boosted(make_set(x, {1, 1, 1, 1, 1}), {});
  EXPECT_TRUE(m.trees.empty());
  EXPECT_DOUBLE_EQ(m.predict(x.row(0)), 0.5);
}

TEST(Boosting, OneRoundLeafFormula) {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  const std::vector<int> y{0, 0, 1, 1};
  const BoostedParams params{.n_rounds = 1, .learning_rate = 0.3, .l2 = 1.0, .min_child_weight = 0.1};
  const BoostedModel m = fit_boosted(make_set(x, y), params);
  ASSERT_EQ(m.trees.size(), 1u);
  const Tree& t = m.trees[0];
  // p = 0.5 everywhere: g = 0.5 - y, h = 0.25.
  EXPECT_EQ(t.root().feature, 0);
  EXPECT_DOUBLE_EQ(t.root().threshold, 2.5);
  EXPECT_NEAR(t.predict(x.row(0)), -1.0 / 1.5, 1e-12);
  EXPECT_NEAR(t.predict(x.row(3)), 1.0 / 1.5, 1e-12);
  EXPECT_NEAR(m.predict(x.row(3)), sigmoid(0.3 / 1.5), 1e-12);
  // min_child_weight 1 forbids children with hessian 0.5.
  const BoostedModel stump = fit_boosted(make_set(x, y), {.n_rounds = 1});
  EXPECT_EQ(stump.trees[0].size(), 1u);
  EXPECT_EQ(stump.trees[0].root().value, 0.0);
}

TEST(Boosting, LeafValuesMatchClosedForm) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const SupervisedSet s = random_set(rng, 30, 3);
    const double base = 0.3, lambda = 1.5;
    const BoostedModel m =
        fit_boosted(s, {.n_rounds = 1, .max_depth = 3, .l2 = lambda, .min_child_weight = 0.5, .base_score = base});
    ASSERT_EQ(m.trees.size(), 1u);
    const Tree& t = m.trees[0];
    std::map<const TreeNode*, std::pair<double, double>> sums;
    for (Eigen::Index i = 0; i < s.x().rows(); ++i) {
      auto& [g, h] = sums[&t.leaf_for(s.x().row(i))];
      g += base - s.labels(i);
      h += base * (1 - base);
    }
    for (const auto& [leaf, gh] : sums) EXPECT_NEAR(leaf->value, -gh.first / (gh.second + lambda), 1e-9);
  }
}

TEST(Boosting, LossNonIncreasing) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const SupervisedSet s = random_set(rng, 40, 4, 2.0);
    const BoostedModel m = fit_boosted(s, {.n_rounds = 100});
    for (std::size_t r = 1; r < m.training_loss.size(); ++r) {
      EXPECT_LE(m.training_loss[r], m.training_loss[r - 1] + 1e-12);
    }
  }
}

TEST(Boosting, SeparableRanking) {
  Matrix x(10, 1);
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i * 0.1;
    y.push_back(i >= 5);
  }
  const BoostedModel m = fit_boosted(make_set(x, y), {.n_rounds = 50, .learning_rate = 0.3, .l2 = 1.0});
  for (int a = 0; a < 5; ++a)
    for (int b = 5; b < 10; ++b) EXPECT_GT(m.predict(x.row(b)), m.predict(x.row(a)));
}

TEST(Logistic, ZeroIterations) {
  std::mt19937_64 rng(4);
  const SupervisedSet s = random_set(rng, 10, 2);
  const LogisticModel m = fit_logistic(s, {.max_iter = 0});
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_EQ(m.predict(s.x().row(i)), 0.5);
  EXPECT_FALSE(m.converged);
}

TEST(Logistic, SeparableSign) {
  Matrix x(6, 1);
  x << 0, 1, 2, 3, 4, 5;
  EXPECT_GT(fit_logistic(make_set(x, {0, 0, 0, 1, 1, 1}), {}).weights(0), 0);
  EXPECT_LT(fit_logistic(make_set(x, {1, 1, 1, 0, 0, 0}), {}).weights(0), 0);
}

TEST(Logistic, MatchesGridSearch) {
  Matrix x(3, 1);
  x << 0.2, 1.0, 2.5;
  BinaryVector y(3);
  y << 0, 1, 0;
  const double l2 = 0.5;
  double grid_best = std::numeric_limits<double>::infinity();
  for (int i = -500; i <= 500; ++i) {
    for (int j = -500; j <= 500; ++j) {
      // Direct sum of the regularized log-loss.
      const double w = i * 0.01, b = j * 0.01;
      double loss = 0.5 * l2 * w * w;
      for (int k = 0; k < 3; ++k) {
        const double p = 1.0 / (1.0 + std::exp(-(w * x(k, 0) + b)));
        loss -= y(k) ? std::log(p) : std::log(1 - p);
      }
      grid_best = std::min(grid_best, loss);
    }
  }
  const LogisticModel m = fit_logistic(x, y, {.l2 = l2});
  EXPECT_TRUE(m.converged);
  const double fitted = logistic_objective(x, y, m.weights, m.intercept, l2);
  EXPECT_LE(fitted, grid_best + 1e-4);
  EXPECT_GE(fitted, grid_best - 1e-3);
}

TEST(Rca, BenchmarkMonotone) {
  Matrix r(2, 3);
  r << 0, 0.5, 2, 1, 0.1, 7;
  const ScoreMatrix s = rca_benchmark({2010, r});
  EXPECT_EQ(s.values(0, 0), 0.0);
  EXPECT_EQ(s.year, 2010);
  for (Eigen::Index i = 0; i < r.size(); ++i)
    for (Eigen::Index j = 0; j < r.size(); ++j)
      EXPECT_EQ(r.data()[i] < r.data()[j], s.values.data()[i] < s.values.data()[j]);
  ModelSpec spec;
  spec.kind = ModelKind::kRcaBenchmark;
  std::mt19937_64 rng(5);
  SupervisedSet set = random_set(rng, 8, 3);
  set.target_product = 2;
  const Model m = fit_model(spec, set, 0);
  const Vector v = predict_scores(m, set.x());
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_EQ(v(i), rca_score(set.x()(i, 2)));
}

TEST(Predict, IdenticalLeavesAndShapes) {
  ForestModel f;
  f.num_features = 2;
  TreeNode leaf;
  leaf.value = 0.3;
  f.trees.assign(5, Tree({leaf}));
  const Matrix x = Matrix::Random(4, 2);
  const Vector s = predict_scores(f, x);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s(i), 0.3);
  EXPECT_THROW(predict_scores(f, Matrix::Zero(4, 3)), ValidationError);
}

TEST(Predict, RowPermutation) {
  std::mt19937_64 rng(6);
  const SupervisedSet s = random_set(rng, 50, 4);
  for (ModelKind kind : {ModelKind::kTree, ModelKind::kForest, ModelKind::kBoosted, ModelKind::kLogistic}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.forest.n_trees = 10;
    spec.boosted.n_rounds = 10;
    const Model m = fit_model(spec, s, 9);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(50);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 50, rng);
    const Matrix shuffled = perm * s.x();
    const Vector a = predict_scores(m, s.x());
    EXPECT_EQ(predict_scores(m, shuffled), perm * a);
    EXPECT_TRUE((a.array() >= 0).all() && (a.array() <= 1).all());
  }
}

TEST(Serialize, RoundTripIsBitIdentical) {
  std::mt19937_64 rng(7);
  const SupervisedSet s = random_set(rng, 60, 5);
  for (ModelKind kind : {ModelKind::kTree, ModelKind::kForest, ModelKind::kBoosted,
                         ModelKind::kLogistic, ModelKind::kRcaBenchmark}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.forest.n_trees = 7;
    spec.boosted.n_rounds = 12;
    const Model m = fit_model(spec, s, 3);
    const std::string text = serialize_model(m);
    const Model back = deserialize_model(text);
    EXPECT_EQ(back.index(), m.index());
    EXPECT_EQ(predict_scores(back, s.x()), predict_scores(m, s.x()));
    EXPECT_EQ(serialize_model(back), text);
  }
  EXPECT_THROW(deserialize_model("{\"format\": \"other\"}"), ValidationError);
  EXPECT_THROW(deserialize_model("not json"), ParseError);
}

TEST(Importance, SingleSplitAndNormalization) {
  Matrix x(4, 3);
  x << 0, 5, 1, 0, 3, 2, 1, 4, 3, 1, 5, 4;
  ModelSpec spec;
  spec.kind = ModelKind::kTree;
  const Model tree = fit_model(spec, make_set(x, {0, 0, 1, 1}), 0);
  const Vector imp = feature_importance(tree);
  EXPECT_DOUBLE_EQ(imp(0), 1.0);
  EXPECT_EQ(imp(1) + imp(2), 0.0);

  const Model flat = fit_model(spec, make_set(x, {1, 1, 1, 1}), 0);
  EXPECT_TRUE(feature_importance(flat).isZero(0));

  std::mt19937_64 rng(8);
  for (ModelKind kind : {ModelKind::kForest, ModelKind::kBoosted}) {
    ModelSpec s;
    s.kind = kind;
    s.forest.n_trees = 20;
    s.boosted.n_rounds = 20;
    const Vector v = feature_importance(fit_model(s, random_set(rng, 80, 6), 1));
    EXPECT_NEAR(v.sum(), 1.0, 1e-9);
    EXPECT_TRUE((v.array() >= 0).all());
  }
  spec.kind = ModelKind::kLogistic;
  EXPECT_THROW(feature_importance(fit_model(spec, random_set(rng, 20, 2), 0)), ValidationError);
}

TEST(Importance, SignalBeatsNoise) {
  int wins = 0;
  for (int run = 0; run < 100; ++run) {
    std::mt19937_64 rng(1000 + run);
    const SupervisedSet s = random_set(rng, 100, 2, 3.0);
    ModelSpec spec;
    spec.forest.n_trees = 10;
    spec.forest.max_features = 2;
    const Vector v = feature_importance(fit_model(spec, s, static_cast<std::uint64_t>(run)));
    wins += v(0) > v(1);
  }
  EXPECT_GE(wins, 95);
}

TEST(Assemble, CoverageRules) {
  const std::vector<std::string> countries{"a", "b"}, products{"x", "y"};
  std::vector<ScoreBlock> blocks{{0, {0, 1}, Vector::Constant(2, 0.1)},
                                 {1, {0, 1}, Vector::Constant(2, 0.2)}};
  const ScoreMatrix m = assemble_score_matrix(blocks, countries, products, 2018);
  EXPECT_EQ(m.values(1, 1), 0.2);
  EXPECT_EQ(m.values(0, 0), 0.1);

  std::vector<ScoreBlock> folds{{0, {0}, Vector::Constant(1, 0.4), 0},
                                {0, {1}, Vector::Constant(1, 0.6), 1},
                                {1, {1}, Vector::Constant(1, 0.7), 1},
                                {1, {0}, Vector::Constant(1, 0.5), 0}};
  const ScoreMatrix cv = assemble_score_matrix(folds, countries, products, 2018);
  EXPECT_EQ(cv.values(0, 0), 0.4);
  EXPECT_EQ(cv.values(1, 0), 0.6);

  folds.push_back({1, {0}, Vector::Constant(1, 0.5), 1});
  try {
    assemble_score_matrix(folds, countries, products, 2018);
    FAIL();
  } catch (const AssemblyError& e) {
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
  }
  blocks.pop_back();
  EXPECT_THROW(assemble_score_matrix(blocks, countries, products, 2018), AssemblyError);
}

TEST(FitModel, SeedDeterminism) {
  std::mt19937_64 rng(9);
  const SupervisedSet s = random_set(rng, 40, 6);
  ModelSpec spec;
  spec.forest.n_trees = 8;
  EXPECT_EQ(predict_scores(fit_model(spec, s, 5), s.x()), predict_scores(fit_model(spec, s, 5), s.x()));
  EXPECT_EQ(parse_model_kind("boosted"), ModelKind::kBoosted);
  EXPECT_THROW(parse_model_kind("svm"), ValidationError);
}
