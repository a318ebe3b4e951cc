#include "exportcast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

namespace exportcast {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ValidationError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::size_t read_max_features(const json& v) {
  if (v.is_string()) {
    if (v == "sqrt") return 0;
    if (v == "all") return std::numeric_limits<std::size_t>::max();
    throw ValidationError("max_features must be a count, \"sqrt\" or \"all\"");
  }
  return v.get<std::size_t>();
}

ModelSpec parse_model(const json& j) {
  ModelSpec spec;
  spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  read_opt(j, "name", spec.name);
  switch (spec.kind) {
    case ModelKind::kTree:
      reject_unknown(j, {"kind", "name", "max_depth", "min_samples_leaf", "max_features"}, "tree model");
      read_opt(j, "max_depth", spec.tree.max_depth);
      read_opt(j, "min_samples_leaf", spec.tree.min_samples_leaf);
      if (j.contains("max_features")) spec.tree.max_features = read_max_features(j.at("max_features"));
      break;
    case ModelKind::kForest:
      reject_unknown(j, {"kind", "name", "n_trees", "max_features", "bootstrap", "max_depth",
                         "min_samples_leaf"},
                     "forest model");
      read_opt(j, "n_trees", spec.forest.n_trees);
      read_opt(j, "bootstrap", spec.forest.bootstrap);
      read_opt(j, "max_depth", spec.forest.max_depth);
      read_opt(j, "min_samples_leaf", spec.forest.min_samples_leaf);
      if (j.contains("max_features")) spec.forest.max_features = read_max_features(j.at("max_features"));
      break;
    case ModelKind::kBoosted:
      reject_unknown(j, {"kind", "name", "n_rounds", "learning_rate", "max_depth", "l2",
                         "min_child_weight", "base_score"},
                     "boosted model");
      read_opt(j, "n_rounds", spec.boosted.n_rounds);
      read_opt(j, "learning_rate", spec.boosted.learning_rate);
      read_opt(j, "max_depth", spec.boosted.max_depth);
      read_opt(j, "l2", spec.boosted.l2);
      read_opt(j, "min_child_weight", spec.boosted.min_child_weight);
      read_opt(j, "base_score", spec.boosted.base_score);
      break;
    case ModelKind::kLogistic:
      reject_unknown(j, {"kind", "name", "l2", "max_iter", "tol"}, "logistic model");
      read_opt(j, "l2", spec.logistic.l2);
      read_opt(j, "max_iter", spec.logistic.max_iter);
      read_opt(j, "tol", spec.logistic.tol);
      break;
    case ModelKind::kRcaBenchmark:
      reject_unknown(j, {"kind", "name"}, "rca model");
      break;
  }
  return spec;
}

WorldParams parse_world(const json& j, DataSource& source) {
  reject_unknown(j, {"n_countries", "n_products", "n_capabilities", "min_requirements",
                     "max_requirements", "min_producers", "endowment_low", "endowment_high", "profile_clusters",
                     "profile_flip", "noise", "noise_persistence", "acquisition_rate", "partial_level",
                     "size_dispersion", "market_dispersion", "intensity_dispersion", "seed",
                     "years", "first_year"},
                 "data.synth");
  WorldParams w;
  read_opt(j, "n_countries", w.n_countries);
  read_opt(j, "n_products", w.n_products);
  read_opt(j, "n_capabilities", w.n_capabilities);
  read_opt(j, "min_requirements", w.min_requirements);
  read_opt(j, "max_requirements", w.max_requirements);
  read_opt(j, "min_producers", w.min_producers);
  read_opt(j, "endowment_low", w.endowment_low);
  read_opt(j, "endowment_high", w.endowment_high);
  read_opt(j, "profile_clusters", w.profile_clusters);
  read_opt(j, "profile_flip", w.profile_flip);
  read_opt(j, "noise", w.noise);
  read_opt(j, "noise_persistence", w.noise_persistence);
  read_opt(j, "acquisition_rate", w.acquisition_rate);
  read_opt(j, "partial_level", w.partial_level);
  read_opt(j, "size_dispersion", w.size_dispersion);
  read_opt(j, "market_dispersion", w.market_dispersion);
  read_opt(j, "intensity_dispersion", w.intensity_dispersion);
  read_opt(j, "seed", w.seed);
  read_opt(j, "years", source.synth_years);
  read_opt(j, "first_year", source.synth_first_year);
  return w;
}

std::string json_number(double v) {
  return std::isfinite(v) ? format_double(v) : "nan";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<std::size_t> distinct_countries(const std::vector<RowId>& rows) {
  std::set<std::size_t> s;
  for (const RowId& r : rows) s.insert(r.country);
  return {s.begin(), s.end()};
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(1, std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    reject_unknown(doc, {"data", "years", "delta_model", "eval_deltas", "task", "rca_threshold",
                         "inactivity_threshold", "models", "model", "cv", "precision_k",
                         "calibration_bins", "training_window", "out_dir", "seed", "workers"},
                   "config");
    if (!doc.contains("data")) throw ValidationError("config needs a 'data' section");
    const json& data = doc.at("data");
    reject_unknown(data, {"csv", "columns", "synth", "aggregate_digits"}, "data");
    if (data.contains("csv") == data.contains("synth")) {
      throw ValidationError("data needs exactly one of 'csv' or 'synth'");
    }
    if (data.contains("csv")) c.data.csv = data.at("csv").get<std::string>();
    if (data.contains("columns")) {
      const json& cols = data.at("columns");
      reject_unknown(cols, {"year", "country", "product", "value"}, "data.columns");
      read_opt(cols, "year", c.data.columns.year);
      read_opt(cols, "country", c.data.columns.country);
      read_opt(cols, "product", c.data.columns.product);
      read_opt(cols, "value", c.data.columns.value);
    }
    if (data.contains("synth")) c.data.synth = parse_world(data.at("synth"), c.data);
    if (data.contains("aggregate_digits")) c.data.aggregate_digits = data.at("aggregate_digits").get<int>();

    if (doc.contains("years")) {
      const auto years = doc.at("years").get<std::vector<int>>();
      if (years.size() != 2) throw ValidationError("years must be [first, last]");
      c.first_year = years[0];
      c.last_year = years[1];
    }
    read_opt(doc, "delta_model", c.delta_model);
    read_opt(doc, "eval_deltas", c.eval_deltas);
    if (doc.contains("task")) c.task = parse_task(doc.at("task").get<std::string>());
    read_opt(doc, "rca_threshold", c.rca_threshold);
    read_opt(doc, "inactivity_threshold", c.inactivity_threshold);
    if (doc.contains("models")) {
      for (const json& m : doc.at("models")) c.models.push_back(parse_model(m));
    }
    if (doc.contains("model")) c.models.push_back(parse_model(doc.at("model")));
    if (doc.contains("cv")) {
      const json& cv = doc.at("cv");
      reject_unknown(cv, {"enabled", "k", "seed"}, "cv");
      read_opt(cv, "enabled", c.cv.enabled);
      read_opt(cv, "k", c.cv.k);
      read_opt(cv, "seed", c.cv.seed);
    }
    read_opt(doc, "precision_k", c.precision_k);
    read_opt(doc, "calibration_bins", c.calibration_bins);
    if (doc.contains("training_window")) {
      const auto w = doc.at("training_window").get<std::string>();
      if (w == "leak_free") {
        c.window = TrainingWindow::kLeakFree;
      } else if (w == "through_test_year") {
        c.window = TrainingWindow::kThroughTestYear;
      } else {
        throw ValidationError("training_window must be 'leak_free' or 'through_test_year'");
      }
    }
    if (doc.contains("out_dir")) c.out_dir = doc.at("out_dir").get<std::string>();
    read_opt(doc, "seed", c.seed);
    read_opt(doc, "workers", c.workers);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.models.empty()) c.models.push_back(ModelSpec{});
  std::set<std::string> labels;
  for (const ModelSpec& m : c.models) {
    if (!labels.insert(m.label()).second) {
      throw ValidationError("duplicate model name '" + m.label() + "'");
    }
  }
  if (c.delta_model < 1) throw ValidationError("delta_model must be >= 1");
  if (c.eval_deltas.empty()) throw ValidationError("eval_deltas must not be empty");
  for (int d : c.eval_deltas) {
    if (d < 1) throw ValidationError("evaluation deltas must be >= 1");
  }
  if (c.precision_k < 1) throw ValidationError("precision_k must be >= 1");
  if (c.calibration_bins < 2) throw ValidationError("calibration_bins must be >= 2");
  if (c.cv.enabled && c.cv.k < 2) throw ValidationError("cv.k must be >= 2");
  if (c.workers < 1) c.workers = 1;
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ExportPanel load_panel(const ExperimentConfig& config) {
  std::optional<ExportPanel> panel;
  if (config.data.csv) {
    panel.emplace(load_export_csv(*config.data.csv, config.data.columns));
  } else if (config.data.synth) {
    const CapabilityWorld world = make_world(*config.data.synth);
    panel.emplace(generate_panel(world, config.data.synth_years, config.data.synth_first_year).panel);
  } else {
    throw ValidationError("config has no data source");
  }
  if (config.data.aggregate_digits) return aggregate_products(*panel, *config.data.aggregate_digits);
  return std::move(*panel);
}

YearWindow resolve_window(const ExperimentConfig& config, const ExportPanel& panel) {
  YearWindow w{config.first_year.value_or(panel.first_year()),
               config.last_year.value_or(panel.last_year())};
  if (!panel.has_year(w.first) || !panel.has_year(w.last)) {
    throw LookupError("year window [" + std::to_string(w.first) + ", " + std::to_string(w.last) +
                      "] outside panel [" + std::to_string(panel.first_year()) + ", " +
                      std::to_string(panel.last_year()) + "]");
  }
  if (config.delta_model < 1) throw ValidationError("delta_model must be >= 1");
  if (w.first + 2 * config.delta_model > w.last) {
    throw ValidationError("year window [" + std::to_string(w.first) + ", " +
                          std::to_string(w.last) + "] too short for delta_model " +
                          std::to_string(config.delta_model) + " (needs " +
                          std::to_string(2 * config.delta_model) + " years of span)");
  }
  if (config.cv.enabled &&
      (config.cv.k < 2 || static_cast<std::size_t>(config.cv.k) > panel.num_countries())) {
    throw ValidationError("cv.k must lie in [2, " + std::to_string(panel.num_countries()) + "]");
  }
  return w;
}

ScoringResult train_and_score(const ExportPanel& panel, const ExperimentConfig& config,
                              const ModelSpec& spec, std::size_t model_index, int first_year,
                              int train_last_year, int delta, int test_input_year,
                              int target_year) {
  const TrainingStack stack = build_training_stack(panel, first_year, train_last_year, delta,
                                                   config.rca_threshold, config.window);
  const Matrix x_test = compute_rca(panel, test_input_year).values;
  const std::size_t num_products = panel.num_products();

  struct FoldData {
    int fold = -1;
    TrainingStack stack;
    std::vector<std::size_t> train_countries;
    std::vector<Eigen::Index> test_countries;
  };
  std::vector<FoldData> folds;
  if (config.cv.enabled) {
    const FoldPlan plan = make_folds(panel.num_countries(), config.cv.k, config.cv.seed);
    for (int f = 0; f < plan.k; ++f) {
      FoldData fd;
      fd.fold = f;
      fd.stack = cv_filter(stack, plan, f, FoldRole::kTrain);
      fd.train_countries = distinct_countries(fd.stack.rows);
      for (std::size_t c : plan.members(f)) fd.test_countries.push_back(static_cast<Eigen::Index>(c));
      folds.push_back(std::move(fd));
    }
  } else {
    FoldData fd;
    fd.stack = stack;
    fd.train_countries = distinct_countries(stack.rows);
    for (std::size_t c = 0; c < panel.num_countries(); ++c) {
      fd.test_countries.push_back(static_cast<Eigen::Index>(c));
    }
    folds.push_back(std::move(fd));
  }

  const std::size_t num_units = folds.size() * num_products;
  std::vector<ScoreBlock> blocks(num_units);
  std::vector<UnitRecord> units(num_units);
  std::vector<std::string> failures(num_units);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto work = [&] {
    while (!failed.load()) {
      const std::size_t u = next.fetch_add(1);
      if (u >= num_units) return;
      const FoldData& fd = folds[u / num_products];
      const std::size_t product = u % num_products;
      UnitRecord& rec = units[u];
      rec.product = product;
      rec.fold = fd.fold;
      rec.seed = derive_seed(config.seed, {model_index, product,
                                           static_cast<std::uint64_t>(fd.fold + 1)});
      rec.train_rows = fd.stack.size();
      rec.train_countries = fd.train_countries;
      for (Eigen::Index c : fd.test_countries) rec.predicted_countries.push_back(static_cast<std::size_t>(c));
      try {
        const auto start = std::chrono::steady_clock::now();
        const Model model = fit_model(spec, fd.stack.for_product(product), rec.seed);
        const Matrix x = x_test(fd.test_countries, Eigen::all);
        blocks[u] = {product, rec.predicted_countries, predict_scores(model, x), fd.fold};
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (const std::exception& e) {
        failures[u] = e.what();
        failed.store(true);
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, num_units));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  for (std::size_t u = 0; u < num_units; ++u) {
    if (!failures[u].empty()) {
      throw Error("model '" + spec.label() + "', product " + panel.products()[u % num_products] +
                  (folds[u / num_products].fold >= 0
                       ? ", fold " + std::to_string(folds[u / num_products].fold)
                       : std::string()) +
                  ": " + failures[u]);
    }
  }
  ScoringResult result;
  result.scores = assemble_score_matrix(blocks, panel.countries(), panel.products(), target_year);
  result.units = std::move(units);
  return result;
}

void audit_cv_coverage(const std::vector<UnitRecord>& units, std::size_t num_countries,
                       std::size_t num_products, bool cross_validated) {
  DenseMatrix<int> hits = DenseMatrix<int>::Zero(static_cast<Eigen::Index>(num_countries),
                                                 static_cast<Eigen::Index>(num_products));
  for (const UnitRecord& u : units) {
    for (std::size_t c : u.predicted_countries) {
      if (cross_validated &&
          std::binary_search(u.train_countries.begin(), u.train_countries.end(), c)) {
        throw AssemblyError("country index " + std::to_string(c) + " predicted for product " +
                            std::to_string(u.product) + " by fold " + std::to_string(u.fold) +
                            " which trained on it");
      }
      ++hits(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(u.product));
    }
  }
  for (Eigen::Index c = 0; c < hits.rows(); ++c) {
    for (Eigen::Index p = 0; p < hits.cols(); ++p) {
      if (hits(c, p) != 1) {
        throw AssemblyError("country index " + std::to_string(c) + ", product index " +
                            std::to_string(p) + " predicted " + std::to_string(hits(c, p)) +
                            " times");
      }
    }
  }
}

RunResult run_experiment(const ExportPanel& panel, const ExperimentConfig& config) {
  RunResult result;
  result.window = resolve_window(config, panel);
  const int first = result.window.first;
  const int last = result.window.last;
  const int delta = config.delta_model;
  result.test = build_test(panel, last, delta, config.rca_threshold);
  result.mask = activation_candidates(panel, first, last - delta, config.inactivity_threshold);
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    ModelRun run;
    run.spec = config.models[i];
    run.scoring = train_and_score(panel, config, run.spec, i, first, last, delta, last - delta, last);
    audit_cv_coverage(run.scoring.units, panel.num_countries(), panel.num_products(),
                      config.cv.enabled);
    run.reports[0] = evaluate(restrict_to_task(run.scoring.scores, result.test.y, Task::kFull),
                              Task::kFull, config.precision_k);
    run.reports[1] = evaluate(
        restrict_to_task(run.scoring.scores, result.test.y, Task::kActivations, &result.mask),
        Task::kActivations, config.precision_k);
    result.models.push_back(std::move(run));
  }
  return result;
}

DescribeResult describe_panel(const ExportPanel& panel, const ExperimentConfig& config) {
  const int first = config.first_year.value_or(panel.first_year());
  const int last = config.last_year.value_or(panel.last_year());
  if (!panel.has_year(first) || !panel.has_year(last) || first > last) {
    throw LookupError("year window outside the panel");
  }
  DescribeResult out;
  std::vector<PresenceMatrix> presence;
  for (int y = first; y <= last; ++y) {
    presence.push_back(binarize(compute_rca(panel, y), config.rca_threshold));
    out.density.emplace_back(y, density(presence.back()));
  }
  for (int d : config.eval_deltas) {
    if (first + d > last) {
      throw ValidationError("delta " + std::to_string(d) + " exceeds the year window (max " +
                            std::to_string(last - first) + ")");
    }
    std::array<std::array<std::size_t, 2>, 2> counts{};
    for (int y = first; y + d <= last; ++y) {
      const TransitionMatrix t =
          transition_probabilities(presence[static_cast<std::size_t>(y - first)],
                                   presence[static_cast<std::size_t>(y + d - first)]);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) counts[a][b] += t.counts[a][b];
      }
    }
    out.transitions.emplace_back(d, transitions_from_counts(counts));
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, std::optional<double>>> indicators(const MetricsReport& r) {
  return {{"auc_roc", r.auc_roc},     {"f1", r.f1},           {"precision_at_k", r.precision_at_k},
          {"precision", r.precision}, {"recall", r.recall},   {"mcc", r.mcc},
          {"auc_pr", r.auc_pr},       {"accuracy", r.accuracy}, {"npv", r.npv}};
}

}  // namespace

std::vector<SweepRow> delta_sweep(const ExportPanel& panel, const ExperimentConfig& config) {
  const YearWindow w = resolve_window(config, panel);
  const int max_delta = *std::max_element(config.eval_deltas.begin(), config.eval_deltas.end());
  const int feasible = w.last - w.first - config.delta_model;
  if (max_delta > feasible) {
    throw ValidationError("evaluation delta " + std::to_string(max_delta) +
                          " is infeasible; the maximum for this window and delta_model is " +
                          std::to_string(feasible));
  }
  std::vector<int> deltas = config.eval_deltas;
  std::sort(deltas.begin(), deltas.end());
  deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
  const int anchor = w.last - max_delta;
  const ActivationMask mask =
      activation_candidates(panel, w.first, anchor, config.inactivity_threshold);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const ModelSpec& spec = config.models[i];
    const ScoringResult scoring =
        train_and_score(panel, config, spec, i, w.first, anchor + config.delta_model,
                        config.delta_model, anchor, anchor + config.delta_model);
    audit_cv_coverage(scoring.units, panel.num_countries(), panel.num_products(), config.cv.enabled);
    for (Task task : {Task::kFull, Task::kActivations}) {
      std::map<std::string, std::optional<double>> base;
      for (int d : deltas) {
        const PresenceMatrix truth = binarize(compute_rca(panel, anchor + d), config.rca_threshold);
        const MetricsReport r = evaluate(
            restrict_to_task(scoring.scores, truth, task, task == Task::kActivations ? &mask : nullptr),
            task, config.precision_k);
        for (const auto& [name, value] : indicators(r)) {
          if (d == deltas.front()) base[name] = value;
          SweepRow row{spec.label(), task, name, d, value, std::nullopt};
          if (value && base[name] && *base[name] != 0.0) row.normalized = *value / *base[name];
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

ImportanceResult product_importance(const ExportPanel& panel, const ExperimentConfig& config,
                                    const std::string& product) {
  const std::size_t target = panel.product_index(product);
  const YearWindow w = resolve_window(config, panel);
  ModelSpec spec;
  std::size_t model_index = 0;
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const ModelKind k = config.models[i].kind;
    if (k == ModelKind::kForest || k == ModelKind::kBoosted || k == ModelKind::kTree) {
      spec = config.models[i];
      model_index = i;
      break;
    }
  }
  const TrainingStack stack = build_training_stack(panel, w.first, w.last, config.delta_model,
                                                   config.rca_threshold, config.window);
  ImportanceResult out{{}, fit_model(spec, stack.for_product(target),
                                     derive_seed(config.seed, {model_index, target, 0}))};
  const Vector imp = feature_importance(out.model);
  for (Eigen::Index f = 0; f < imp.size(); ++f) out.ranked.emplace_back(static_cast<std::size_t>(f), imp(f));
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<fs::path> write_describe(const DescribeResult& result, const fs::path& out_dir) {
  std::ostringstream dens;
  dens << "year,density\n";
  for (const auto& [year, d] : result.density) dens << year << ',' << format_double(d) << '\n';
  std::ostringstream trans;
  trans << "delta,p00,p01,p10,p11,n0,n1\n";
  for (const auto& [delta, t] : result.transitions) {
    trans << delta;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        trans << ',' << (t.probability[a][b] ? format_double(*t.probability[a][b]) : "");
      }
    }
    trans << ',' << t.support[0] << ',' << t.support[1] << '\n';
  }
  write_text(out_dir / "density.csv", dens.str());
  write_text(out_dir / "transitions.csv", trans.str());
  return {"density.csv", "transitions.csv"};
}

std::vector<fs::path> write_run(const RunResult& result, const ExportPanel& panel,
                                const ExperimentConfig& config, const fs::path& out_dir) {
  std::vector<fs::path> files;
  for (const ModelRun& run : result.models) {
    const fs::path dir = run.spec.label();
    for (const MetricsReport& r : run.reports) {
      const fs::path name = dir / ("report_" + std::string(to_string(r.task)) + ".json");
      write_text(out_dir / name, report_to_json(r));
      files.push_back(name);
    }
    std::ostringstream scores;
    write_labeled_matrix(scores, "country", panel.countries(), panel.products(),
                         run.scoring.scores.values);
    write_text(out_dir / dir / "scores.csv", scores.str());
    files.push_back(dir / "scores.csv");

    nlohmann::ordered_json units = nlohmann::ordered_json::array();
    for (const UnitRecord& u : run.scoring.units) {
      units.push_back({{"product", panel.products()[u.product]},
                       {"fold", u.fold},
                       {"seed", u.seed},
                       {"train_rows", u.train_rows},
                       {"train_countries", u.train_countries},
                       {"predicted_countries", u.predicted_countries}});
    }
    nlohmann::ordered_json meta;
    meta["model"] = run.spec.label();
    meta["kind"] = to_string(run.spec.kind);
    meta["seed"] = config.seed;
    meta["cv"] = {{"enabled", config.cv.enabled}, {"k", config.cv.k}, {"seed", config.cv.seed}};
    meta["window"] = {result.window.first, result.window.last};
    meta["delta_model"] = config.delta_model;
    meta["thresholds"] = {{"full", json_number(run.reports[0].threshold)},
                          {"activations", json_number(run.reports[1].threshold)}};
    meta["units"] = units;
    write_text(out_dir / dir / "units.json", meta.dump(1) + "\n");
    files.push_back(dir / "units.json");
  }
  return files;
}

std::vector<fs::path> write_timings(const RunResult& result, const ExportPanel& panel,
                                   const fs::path& out_dir) {
  std::vector<fs::path> files;
  for (const ModelRun& run : result.models) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    double total = 0.0;
    for (const UnitRecord& u : run.scoring.units) {
      doc.push_back({{"product", panel.products()[u.product]}, {"fold", u.fold}, {"seconds", u.seconds}});
      total += u.seconds;
    }
    const fs::path name = fs::path(run.spec.label()) / "timings.json";
    nlohmann::ordered_json wrapped{{"total_seconds", total}, {"units", doc}};
    write_text(out_dir / name, wrapped.dump(1) + "\n");
    files.push_back(name);
  }
  return files;
}

std::vector<fs::path> write_sweep(const std::vector<SweepRow>& rows, const fs::path& out_dir) {
  std::ostringstream out;
  out << "model,task,indicator,delta,value,normalized\n";
  for (const SweepRow& r : rows) {
    out << r.model << ',' << to_string(r.task) << ',' << r.indicator << ',' << r.delta << ','
        << (r.value ? format_double(*r.value) : "") << ','
        << (r.normalized ? format_double(*r.normalized) : "") << '\n';
  }
  write_text(out_dir / "delta_sweep.csv", out.str());
  return {"delta_sweep.csv"};
}

std::vector<fs::path> write_calibration(const RunResult& result, const ExperimentConfig& config,
                                        const fs::path& out_dir) {
  std::vector<fs::path> files;
  for (const ModelRun& run : result.models) {
    for (Task task : {Task::kFull, Task::kActivations}) {
      const EvalSet set = restrict_to_task(run.scoring.scores, result.test.y, task,
                                           task == Task::kActivations ? &result.mask : nullptr);
      const CalibrationCurve curve = calibration_curve(set.scores, set.labels, config.calibration_bins);
      std::ostringstream out;
      write_calibration_csv(out, curve);
      const fs::path name = fs::path(run.spec.label()) / ("calibration_" + std::string(to_string(task)) + ".csv");
      write_text(out_dir / name, out.str());
      files.push_back(name);
    }
  }
  return files;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

void write_manifest(const fs::path& out_dir, const std::vector<fs::path>& files,
                    const std::vector<fs::path>& volatile_files) {
  nlohmann::ordered_json doc;
  doc["format"] = "exportcast-manifest";
  doc["version"] = 1;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const fs::path& f : files) {
    std::ifstream in(out_dir / f, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    list.push_back({{"path", f.generic_string()}, {"sha256", sha256_hex(buf.str())}});
  }
  for (const fs::path& f : volatile_files) {
    list.push_back({{"path", f.generic_string()}, {"sha256", nullptr}, {"volatile", true}});
  }
  doc["artifacts"] = list;
  write_text(out_dir / "manifest.json", doc.dump(1) + "\n");
}

}  // namespace exportcast
