#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "dot_parser.hpp"
#include "oracles.hpp"
#include "exportcast/forest.hpp"
#include "exportcast/tree.hpp"

using namespace exportcast;
using namespace oracles;

TEST(Tree, PureRootIsLeaf) {
  Matrix x(3, 1);
  x << 1, 2, 3;
  for (int cls : {0, 1}) {
    const Tree t = fit_tree(make_set(x, {cls, cls, cls}), {});
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t.root().value, cls);
  }
}

TEST(Tree, SeparableSplit) {
  Matrix x(4, 1);
  x << 0.1, 0.5, 0.9, 1.3;
  const Tree t = fit_tree(make_set(x, {0, 0, 1, 1}), {});
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.root().feature, 0);
  EXPECT_DOUBLE_EQ(t.root().threshold, 0.7);
  const auto& n = t.nodes();
  EXPECT_EQ(n[static_cast<std::size_t>(t.root().left)].value, 0.0);
  EXPECT_EQ(n[static_cast<std::size_t>(t.root().right)].value, 1.0);
}

TEST(Tree, SixSampleBruteForce) {
  Matrix x(6, 2);
  x << 1, 5, 2, 4, 3, 3, 4, 2, 5, 1, 6, 0;
  const std::vector<int> y{0, 1, 0, 1, 1, 1};
  const Split s = brute_force_root(x, y);
  const Tree t = fit_tree(make_set(x, y), {});
  EXPECT_EQ(t.root().feature, s.feature);
  EXPECT_DOUBLE_EQ(t.root().threshold, s.threshold);
}

TEST(Tree, RootMatchesExhaustiveSearch) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 29);
    const int p = 1 + static_cast<int>(rng() % 4);
    Matrix x(n, p);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int f = 0; f < p; ++f) x(i, f) = static_cast<double>(rng() % 6) * 0.25;
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
    }
    const Split s = brute_force_root(x, y);
    const Tree t = fit_tree(make_set(x, y), {});
    EXPECT_EQ(t.root().feature, s.feature) << "trial " << trial;
    if (s.feature >= 0) {
      EXPECT_DOUBLE_EQ(t.root().threshold, s.threshold) << "trial " << trial;
    }
  }
}

TEST(Tree, SplitsNeverIncreaseImpurityAndLeavesAreFractions) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix x(60, 3);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) {
      for (int f = 0; f < 3; ++f) x(i, f) = std::uniform_real_distribution<double>(0, 1)(rng);
      y[static_cast<std::size_t>(i)] = x(i, 0) + 0.3 * std::normal_distribution<double>()(rng) > 0.5;
    }
    const Tree t = fit_tree(make_set(x, y), {});
    auto gini_n = [](double a, double b) { return a + b > 0 ? 2 * a * b / (a + b) : 0.0; };
    for (const TreeNode& node : t.nodes()) {
      if (node.is_leaf()) {
        EXPECT_DOUBLE_EQ(node.value, node.n_one / (node.n_zero + node.n_one));
        continue;
      }
      const TreeNode& l = t.nodes()[static_cast<std::size_t>(node.left)];
      const TreeNode& r = t.nodes()[static_cast<std::size_t>(node.right)];
      EXPECT_LT(gini_n(l.n_zero, l.n_one) + gini_n(r.n_zero, r.n_one),
                gini_n(node.n_zero, node.n_one) + 1e-12);
      EXPECT_NEAR(node.gain, gini_n(node.n_zero, node.n_one) - gini_n(l.n_zero, l.n_one) -
                                 gini_n(r.n_zero, r.n_one), 1e-9);
    }
  }
}

TEST(Tree, DepthAndLeafSizeLimits) {
  std::mt19937_64 rng(9);
  Matrix x(80, 2);
  std::vector<int> y(80);
  for (int i = 0; i < 80; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = static_cast<double>(rng() % 10);
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
  }
  const SupervisedSet s = make_set(x, y);
  EXPECT_LE(fit_tree(s, {.max_depth = 2}).depth(), 2);
  const Tree t = fit_tree(s, {.min_samples_leaf = 7});
  for (const TreeNode& n : t.nodes()) {
    if (n.is_leaf()) {
      EXPECT_GE(n.n_zero + n.n_one, 7.0);
    }
  }
  SupervisedSet empty = s;
  empty.rows.clear();
  empty.features = std::make_shared<const FeatureBlock>(Matrix(0, 2));
  empty.labels.resize(0);
  EXPECT_THROW(fit_tree(empty, {}), ValidationError);
}

TEST(Tree, HandTraversal) {
  // x0 <= 0.5 ? (x1 <= 2 ? leaf 0.1 : leaf 0.9) : leaf 0.4
  std::vector<TreeNode> nodes(5);
  nodes[0] = {0, 0.5, 1, 2};
  nodes[1] = {1, 2.0, 3, 4};
  nodes[2].value = 0.4;
  nodes[3].value = 0.1;
  nodes[4].value = 0.9;
  const Tree t(nodes);
  Eigen::RowVector2d a(0.5, 2.0), b(0.2, 3.0), c(0.7, 0.0);
  EXPECT_EQ(t.predict(a), 0.1);
  EXPECT_EQ(t.predict(b), 0.9);
  EXPECT_EQ(t.predict(c), 0.4);
  EXPECT_EQ(t.depth(), 2);
}

TEST(Tree, MidpointStaysBelowUpperValue) {
  EXPECT_DOUBLE_EQ(split_midpoint(1.0, 2.0), 1.5);
  const double lo = 1.0, hi = std::nextafter(1.0, 2.0);
  EXPECT_LT(split_midpoint(lo, hi), hi);
  EXPECT_GE(split_midpoint(lo, hi), lo);
}

TEST(Dot, SingleLeafAndParse) {
  Matrix x(3, 1);
  x << 1, 2, 3;
  const Tree leaf = fit_tree(make_set(x, {1, 1, 1}), {});
  const dot::Graph g = dot::parse(export_tree_dot(leaf, {"a"}));
  EXPECT_EQ(g.nodes.size(), 1u);
  EXPECT_TRUE(g.edges.empty());
}

TEST(Dot, RoundTripStructure) {
  std::mt19937_64 rng(3);
  Matrix x(50, 3);
  std::vector<int> y(50);
  for (int i = 0; i < 50; ++i) {
    for (int f = 0; f < 3; ++f) x(i, f) = static_cast<double>(rng() % 100) / 7.0;
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3 == 0);
  }
  const Tree t = fit_tree(make_set(x, y), {.max_depth = 4});
  const std::vector<std::string> names{"860110", "p\"q", "c"};
  const std::string text = export_tree_dot(t, names);
  const dot::Graph g = dot::parse(text);
  EXPECT_EQ(g.name, "Tree");
  ASSERT_EQ(g.nodes.size(), t.size());
  std::size_t internal = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const TreeNode& n = t.nodes()[i];
    const dot::Attrs& a = g.nodes.at(std::to_string(i));
    const std::string& label = a.at("label");
    EXPECT_EQ(a.at("fillcolor").size(), 7u);
    EXPECT_NE(label.find("samples = "), std::string::npos);
    std::ostringstream counts;
    counts << '[' << n.n_zero << ", " << n.n_one << ']';
    EXPECT_NE(label.find(counts.str()), std::string::npos);
    if (!n.is_leaf()) {
      ++internal;
      EXPECT_NE(label.find("\xE2\x89\xA4"), std::string::npos);
    }
  }
  ASSERT_EQ(g.edges.size(), 2 * internal);
  for (const auto& [ends, attrs] : g.edges) {
    const TreeNode& parent = t.nodes()[std::stoul(ends.first)];
    const bool left = std::stoi(ends.second) == parent.left;
    EXPECT_EQ(attrs.at("label").rfind(left ? "\xE2\x89\xA4" : ">", 0), 0u);
  }
}

TEST(Dot, ColorsFollowClassBalance) {
  Matrix x(4, 1);
  x << 0, 1, 2, 3;
  const Tree t = fit_tree(make_set(x, {0, 0, 1, 1}), {});
  const dot::Graph g = dot::parse(export_tree_dot(t, {"a"}));
  EXPECT_EQ(g.nodes.at("1").at("fillcolor"), "#e58139");
  EXPECT_EQ(g.nodes.at("2").at("fillcolor"), "#399de5");
  EXPECT_EQ(g.nodes.at("0").at("fillcolor"), "#ffffff");
}

TEST(Forest, DegenerateForestEqualsTree) {
  std::mt19937_64 rng(5);
  Matrix x(40, 4);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    for (int f = 0; f < 4; ++f) x(i, f) = static_cast<double>(rng() % 13);
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
  }
  const SupervisedSet s = make_set(x, y);
  const ForestModel f = fit_forest(s, {.n_trees = 1, .max_features = 4, .bootstrap = false});
  const Tree t = fit_tree(s, {});
  ASSERT_EQ(f.trees.size(), 1u);
  ASSERT_EQ(f.trees[0].size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(f.trees[0].nodes()[i].feature, t.nodes()[i].feature);
    EXPECT_EQ(f.trees[0].nodes()[i].threshold, t.nodes()[i].threshold);
    EXPECT_EQ(f.trees[0].nodes()[i].value, t.nodes()[i].value);
  }
}

TEST(Forest, DeterministicMeanOfTrees) {
  std::mt19937_64 rng(6);
  Matrix x(60, 9);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    for (int f = 0; f < 9; ++f) x(i, f) = std::uniform_real_distribution<double>(0, 2)(rng);
    y[static_cast<std::size_t>(i)] = x(i, 2) > 1.0;
  }
  const SupervisedSet s = make_set(x, y);
  const ForestModel a = fit_forest(s, {.n_trees = 15, .seed = 3});
  const ForestModel b = fit_forest(s, {.n_trees = 15, .seed = 3});
  const ForestModel c = fit_forest(s, {.n_trees = 15, .seed = 4});
  EXPECT_EQ(resolve_max_features(0, 9), 3u);
  EXPECT_EQ(resolve_max_features(0, 10), 4u);
  bool differs = false;
  for (int i = 0; i < 60; ++i) {
    const auto row = x.row(i);
    EXPECT_EQ(a.predict(row), b.predict(row));
    differs = differs || a.predict(row) != c.predict(row);
    double mean = 0;
    for (const Tree& t : a.trees) mean += t.predict(row);
    EXPECT_DOUBLE_EQ(a.predict(row), mean / 15.0);
    EXPECT_GE(a.predict(row), 0.0);
    EXPECT_LE(a.predict(row), 1.0);
  }
  EXPECT_TRUE(differs);
}
