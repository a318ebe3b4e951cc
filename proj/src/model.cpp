#include "exportcast/model.hpp"

#include <algorithm>
#include <json.hpp>
#include <map>

namespace exportcast {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "exportcast-model";
constexpr int kFormatVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json tree_to_json(const Tree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), n_zero = json::array(), n_one = json::array(),
       value = json::array(), gain = json::array();
  for (const TreeNode& n : tree.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    n_zero.push_back(n.n_zero);
    n_one.push_back(n.n_one);
    value.push_back(n.value);
    gain.push_back(n.gain);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"n_zero", n_zero},       {"n_one", n_one},
          {"value", value},     {"gain", gain}};
}

Tree tree_from_json(const json& j) {
  const std::size_t n = j.at("feature").size();
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& node = nodes[i];
    node.feature = j.at("feature")[i].get<std::int32_t>();
    node.threshold = j.at("threshold")[i].get<double>();
    node.left = j.at("left")[i].get<std::int32_t>();
    node.right = j.at("right")[i].get<std::int32_t>();
    node.n_zero = j.at("n_zero")[i].get<double>();
    node.n_one = j.at("n_one")[i].get<double>();
    node.value = j.at("value")[i].get<double>();
    node.gain = j.at("gain")[i].get<double>();
    const auto limit = static_cast<std::int32_t>(n);
    if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || node.left >= limit ||
                            node.right >= limit || node.feature < 0)) {
      throw ValidationError("malformed tree node " + std::to_string(i));
    }
  }
  if (nodes.empty()) throw ValidationError("tree without nodes");
  return Tree(std::move(nodes));
}

json trees_to_json(const std::vector<Tree>& trees) {
  json out = json::array();
  for (const Tree& t : trees) out.push_back(tree_to_json(t));
  return out;
}

std::vector<Tree> trees_from_json(const json& j) {
  std::vector<Tree> out;
  for (const json& t : j) out.push_back(tree_from_json(t));
  return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTree: return "tree";
    case ModelKind::kForest: return "forest";
    case ModelKind::kBoosted: return "boosted";
    case ModelKind::kLogistic: return "logistic";
    case ModelKind::kRcaBenchmark: return "rca";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kBoosted,
                      ModelKind::kLogistic, ModelKind::kRcaBenchmark}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

Model fit_model(const ModelSpec& spec, const SupervisedSet& set, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::kTree: {
      TreeParams params = spec.tree;
      params.seed = seed;
      return DecisionTreeModel{params, set.features->cols(), fit_tree(set, params)};
    }
    case ModelKind::kForest: {
      ForestParams params = spec.forest;
      params.seed = seed;
      return fit_forest(set, params);
    }
    case ModelKind::kBoosted:
      return fit_boosted(set, spec.boosted);
    case ModelKind::kLogistic:
      return fit_logistic(set, spec.logistic);
    case ModelKind::kRcaBenchmark:
      if (set.target_product >= set.features->cols()) {
        throw ValidationError("target product outside the feature columns");
      }
      return RcaBenchmarkModel{set.target_product, set.features->cols()};
  }
  throw ValidationError("unknown model kind");
}

std::size_t input_dimension(const Model& model) {
  return std::visit(
      Overloaded{[](const LogisticModel& m) { return static_cast<std::size_t>(m.weights.size()); },
                 [](const auto& m) { return m.num_features; }},
      model);
}

Vector predict_scores(const Model& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != input_dimension(model)) {
    throw ValidationError("feature dimension " + std::to_string(x.cols()) +
                          " does not match the trained dimension " +
                          std::to_string(input_dimension(model)));
  }
  Vector out(x.rows());
  std::visit(Overloaded{
                 [&](const DecisionTreeModel& m) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = m.tree.predict(x.row(i));
                 },
                 [&](const RcaBenchmarkModel& m) {
                   out = x.col(static_cast<Eigen::Index>(m.feature)).unaryExpr(&rca_score);
                 },
                 [&](const auto& m) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = m.predict(x.row(i));
                 }},
             model);
  return out;
}

Vector feature_importance(const Model& model) {
  const std::size_t p = input_dimension(model);
  Vector total = Vector::Zero(static_cast<Eigen::Index>(p));
  // Each tree's gains are scaled by its root weight before averaging.
  auto add_tree = [&](const Tree& tree) {
    Vector gains = Vector::Zero(static_cast<Eigen::Index>(p));
    tree.accumulate_gain(std::span<double>(gains.data(), p));
    const double weight = tree.root().n_zero + tree.root().n_one;
    if (weight > 0) total += gains / weight;
  };
  std::visit(Overloaded{
                 [&](const DecisionTreeModel& m) { add_tree(m.tree); },
                 [&](const ForestModel& m) {
                   for (const Tree& t : m.trees) add_tree(t);
                   if (!m.trees.empty()) total /= static_cast<double>(m.trees.size());
                 },
                 [&](const BoostedModel& m) {
                   for (const Tree& t : m.trees) {
                     t.accumulate_gain(std::span<double>(total.data(), p));
                   }
                 },
                 [](const auto&) {
                   throw ValidationError("feature importance needs a tree-based model");
                 }},
             model);
  const double sum = total.sum();
  if (sum > 0.0) total /= sum;
  return total;
}

std::string serialize_model(const Model& model) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kFormatVersion;
  doc["num_features"] = input_dimension(model);
  std::visit(
      Overloaded{
          [&](const DecisionTreeModel& m) {
            doc["kind"] = "tree";
            doc["params"] = {{"max_depth", m.params.max_depth},
                             {"min_samples_leaf", m.params.min_samples_leaf},
                             {"max_features", m.params.max_features},
                             {"seed", m.params.seed}};
            doc["trees"] = json::array({tree_to_json(m.tree)});
          },
          [&](const ForestModel& m) {
            doc["kind"] = "forest";
            doc["params"] = {{"n_trees", m.params.n_trees},
                             {"max_features", m.params.max_features},
                             {"bootstrap", m.params.bootstrap},
                             {"max_depth", m.params.max_depth},
                             {"min_samples_leaf", m.params.min_samples_leaf},
                             {"seed", m.params.seed}};
            doc["trees"] = trees_to_json(m.trees);
          },
          [&](const BoostedModel& m) {
            doc["kind"] = "boosted";
            doc["params"] = {{"n_rounds", m.params.n_rounds},
                             {"learning_rate", m.params.learning_rate},
                             {"max_depth", m.params.max_depth},
                             {"l2", m.params.l2},
                             {"min_child_weight", m.params.min_child_weight},
                             {"base_score", m.params.base_score}};
            doc["trees"] = trees_to_json(m.trees);
            doc["training_loss"] = m.training_loss;
          },
          [&](const LogisticModel& m) {
            doc["kind"] = "logistic";
            doc["params"] = {{"l2", m.params.l2},
                             {"max_iter", m.params.max_iter},
                             {"tol", m.params.tol}};
            doc["weights"] = std::vector<double>(m.weights.data(),
                                                 m.weights.data() + m.weights.size());
            doc["intercept"] = m.intercept;
            doc["converged"] = m.converged;
            doc["iterations"] = m.iterations;
          },
          [&](const RcaBenchmarkModel& m) {
            doc["kind"] = "rca";
            doc["feature"] = m.feature;
          }},
      model);
  return doc.dump();
}

Model deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(1, std::string("model document: ") + e.what());
  }
  try {
    if (doc.at("format") != kFormat) throw ValidationError("not a model document");
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw ValidationError("unsupported model version " + doc.at("version").dump());
    }
    const auto p = doc.at("num_features").get<std::size_t>();
    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    const json& params = doc.contains("params") ? doc.at("params") : json::object();
    switch (kind) {
      case ModelKind::kTree: {
        DecisionTreeModel m;
        m.num_features = p;
        m.params.max_depth = params.at("max_depth");
        m.params.min_samples_leaf = params.at("min_samples_leaf");
        m.params.max_features = params.at("max_features");
        m.params.seed = params.at("seed");
        m.tree = tree_from_json(doc.at("trees").at(0));
        return m;
      }
      case ModelKind::kForest: {
        ForestModel m;
        m.num_features = p;
        m.params.n_trees = params.at("n_trees");
        m.params.max_features = params.at("max_features");
        m.params.bootstrap = params.at("bootstrap");
        m.params.max_depth = params.at("max_depth");
        m.params.min_samples_leaf = params.at("min_samples_leaf");
        m.params.seed = params.at("seed");
        m.trees = trees_from_json(doc.at("trees"));
        return m;
      }
      case ModelKind::kBoosted: {
        BoostedModel m;
        m.num_features = p;
        m.params.n_rounds = params.at("n_rounds");
        m.params.learning_rate = params.at("learning_rate");
        m.params.max_depth = params.at("max_depth");
        m.params.l2 = params.at("l2");
        m.params.min_child_weight = params.at("min_child_weight");
        m.params.base_score = params.at("base_score");
        m.trees = trees_from_json(doc.at("trees"));
        m.training_loss = doc.at("training_loss").get<std::vector<double>>();
        return m;
      }
      case ModelKind::kLogistic: {
        LogisticModel m;
        m.params.l2 = params.at("l2");
        m.params.max_iter = params.at("max_iter");
        m.params.tol = params.at("tol");
        const auto w = doc.at("weights").get<std::vector<double>>();
        if (w.size() != p) throw ValidationError("weight count mismatch");
        m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.intercept = doc.at("intercept");
        m.converged = doc.at("converged");
        m.iterations = doc.at("iterations");
        return m;
      }
      case ModelKind::kRcaBenchmark:
        return RcaBenchmarkModel{doc.at("feature").get<std::size_t>(), p};
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
  throw ValidationError("unknown model kind");
}

ScoreMatrix rca_benchmark(const RcaMatrix& x_test) {
  return {x_test.year, x_test.values.unaryExpr(&rca_score)};
}

ScoreMatrix assemble_score_matrix(std::span<const ScoreBlock> blocks,
                                  const std::vector<std::string>& countries,
                                  const std::vector<std::string>& products,
                                  int year) {
  const auto nc = static_cast<Eigen::Index>(countries.size());
  const auto np = static_cast<Eigen::Index>(products.size());
  ScoreMatrix out{year, Matrix::Zero(nc, np)};
  DenseMatrix<int> cover = DenseMatrix<int>::Constant(nc, np, -2);
  auto cell = [&](std::size_t c, std::size_t p) {
    return "(" + countries[c] + ", " + products[p] + ")";
  };
  for (const ScoreBlock& b : blocks) {
    if (b.product >= products.size()) {
      throw AssemblyError("score block for unknown product index " + std::to_string(b.product));
    }
    if (static_cast<std::size_t>(b.scores.size()) != b.countries.size()) {
      throw AssemblyError("score block for product " + products[b.product] +
                          " has mismatched lengths");
    }
    for (std::size_t i = 0; i < b.countries.size(); ++i) {
      const std::size_t c = b.countries[i];
      if (c >= countries.size()) {
        throw AssemblyError("score block names unknown country index " + std::to_string(c));
      }
      int& owner = cover(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b.product));
      if (owner != -2) {
        throw AssemblyError("cell " + cell(c, b.product) + " covered twice (folds " +
                            std::to_string(owner) + " and " + std::to_string(b.fold) + ")");
      }
      owner = b.fold;
      out.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b.product)) =
          b.scores(static_cast<Eigen::Index>(i));
    }
  }
  for (Eigen::Index c = 0; c < nc; ++c) {
    for (Eigen::Index p = 0; p < np; ++p) {
      if (cover(c, p) == -2) {
        throw AssemblyError("cell " + cell(static_cast<std::size_t>(c), static_cast<std::size_t>(p)) +
                            " has no score");
      }
    }
  }
  return out;
}

}  // namespace exportcast
