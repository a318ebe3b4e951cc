#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "exportcast/experiment.hpp"

using namespace exportcast;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "data": {"synth": {"n_countries": 24, "n_products": 12, "n_capabilities": 8,
                     "min_requirements": 1, "max_requirements": 3,
                     "acquisition_rate": 0.08, "seed": 5, "years": 9}},
  "delta_model": 2,
  "eval_deltas": [1, 2, 3],
  "models": [{"kind": "rca"},
             {"kind": "forest", "n_trees": 8},
             {"kind": "boosted", "n_rounds": 10, "max_depth": 2}],
  "seed": 17
})";

ExperimentConfig small_config() { return parse_config(kSmall); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("exportcast_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const ExperimentConfig d = parse_config(R"({"data": {"csv": "x.csv"}})");
  EXPECT_EQ(d.delta_model, 5);
  EXPECT_EQ(d.task, Task::kActivations);
  ASSERT_EQ(d.models.size(), 1u);
  EXPECT_EQ(d.models[0].kind, ModelKind::kForest);
  EXPECT_EQ(d.precision_k, 10u);
  EXPECT_EQ(d.window, TrainingWindow::kLeakFree);

  const ExperimentConfig c = parse_config(R"({
    "data": {"csv": "x.csv", "columns": {"year": "yr"}, "aggregate_digits": 4},
    "years": [1996, 2013], "delta_model": 3, "task": "full",
    "model": {"kind": "forest", "max_features": "all", "n_trees": 7},
    "cv": {"enabled": true, "k": 5}, "training_window": "through_test_year", "workers": 3})");
  EXPECT_EQ(c.data.columns.year, "yr");
  EXPECT_EQ(c.data.aggregate_digits, 4);
  EXPECT_EQ(c.first_year, 1996);
  EXPECT_EQ(c.last_year, 2013);
  EXPECT_EQ(c.task, Task::kFull);
  EXPECT_EQ(c.models[0].forest.n_trees, 7u);
  EXPECT_EQ(c.models[0].forest.max_features, std::numeric_limits<std::size_t>::max());
  EXPECT_TRUE(c.cv.enabled);
  EXPECT_EQ(c.window, TrainingWindow::kThroughTestYear);
  EXPECT_EQ(c.workers, 3u);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("{"), ParseError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "bogus": 1})"), ValidationError);
  EXPECT_THROW(parse_config(R"({})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x", "synth": {}}})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "delta_model": 0})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "eval_deltas": []})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "models": [{"kind": "rca"}, {"kind": "rca"}]})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "model": {"kind": "svm"}})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "model": {"kind": "tree", "n_trees": 3}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "cv": {"enabled": true, "k": 1}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "training_window": "all"})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"data": {"csv": "x"}, "years": [2000]})"), ValidationError);
}

TEST(Window, ChecksSpanAndFolds) {
  ExperimentConfig c = small_config();
  const ExportPanel panel = load_panel(c);
  const YearWindow w = resolve_window(c, panel);
  EXPECT_EQ(w.first, 2000);
  EXPECT_EQ(w.last, 2008);
  c.delta_model = 5;
  EXPECT_THROW(resolve_window(c, panel), ValidationError);
  c = small_config();
  c.last_year = 2020;
  EXPECT_THROW(resolve_window(c, panel), LookupError);
  c = small_config();
  c.cv.enabled = true;
  c.cv.k = 25;
  EXPECT_THROW(resolve_window(c, panel), ValidationError);
}

TEST(CvAudit, DetectsLeaksAndGaps) {
  std::vector<UnitRecord> ok{{0, 0, 1, 4, {1}, {0}, 0.0}, {0, 1, 1, 4, {0}, {1}, 0.0}};
  EXPECT_NO_THROW(audit_cv_coverage(ok, 2, 1, true));
  std::vector<UnitRecord> leak{{0, 0, 1, 4, {0, 1}, {0}, 0.0}, {0, 1, 1, 4, {0}, {1}, 0.0}};
  EXPECT_THROW(audit_cv_coverage(leak, 2, 1, true), AssemblyError);
  EXPECT_NO_THROW(audit_cv_coverage({{0, -1, 1, 4, {0, 1}, {0, 1}, 0.0}}, 2, 1, false));
  EXPECT_THROW(audit_cv_coverage({{0, 0, 1, 4, {1}, {0}, 0.0}}, 2, 1, true), AssemblyError);
  std::vector<UnitRecord> twice = ok;
  twice.push_back({0, 2, 1, 4, {}, {1}, 0.0});
  EXPECT_THROW(audit_cv_coverage(twice, 2, 1, true), AssemblyError);
}

TEST(Run, CrossValidatedUnitsHoldOutTheirCountries) {
  ExperimentConfig c = small_config();
  c.cv = {true, 4, 9};
  const ExportPanel panel = load_panel(c);
  const RunResult r = run_experiment(panel, c);
  ASSERT_EQ(r.models.size(), 3u);
  const auto& units = r.models[1].scoring.units;
  EXPECT_EQ(units.size(), 4u * panel.num_products());
  for (const UnitRecord& u : units) {
    EXPECT_EQ(u.train_countries.size() + u.predicted_countries.size(), panel.num_countries());
    // Feature years 2000..2004 are stacked for each training country.
    EXPECT_EQ(u.train_rows, 5 * u.train_countries.size());
  }
}

TEST(Run, ReportsMatchRecomputation) {
  const ExperimentConfig c = small_config();
  const ExportPanel panel = load_panel(c);
  const RunResult r = run_experiment(panel, c);
  EXPECT_EQ(r.test.y.year, 2008);
  EXPECT_EQ(r.mask.last_year, 2006);
  for (const ModelRun& m : r.models) {
    const MetricsReport full =
        evaluate(restrict_to_task(m.scoring.scores, r.test.y, Task::kFull), Task::kFull, 10);
    EXPECT_EQ(report_to_json(full), report_to_json(m.reports[0]));
    EXPECT_EQ(m.reports[0].cells, panel.num_countries() * panel.num_products());
    EXPECT_LT(m.reports[1].cells, m.reports[0].cells);
  }
  EXPECT_EQ(r.models[0].scoring.scores.values, rca_benchmark(compute_rca(panel, 2006)).values);
}

TEST(Run, WorkerCountDoesNotChangeResults) {
  ExperimentConfig c = small_config();
  c.cv = {true, 3, 1};
  const ExportPanel panel = load_panel(c);
  const RunResult one = run_experiment(panel, c);
  c.workers = 4;
  const RunResult four = run_experiment(panel, c);
  for (std::size_t i = 0; i < one.models.size(); ++i) {
    EXPECT_EQ(one.models[i].scoring.scores.values, four.models[i].scoring.scores.values);
    EXPECT_EQ(report_to_json(one.models[i].reports[1]), report_to_json(four.models[i].reports[1]));
  }
  const fs::path a = scratch_dir("w1"), b = scratch_dir("w4");
  const auto fa = write_run(one, panel, c, a);
  const auto fb = write_run(four, panel, c, b);
  ASSERT_EQ(fa, fb);
  for (const fs::path& f : fa) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Describe, FrozenWorldIsIdentity) {
  ExperimentConfig c = parse_config(R"({
    "data": {"synth": {"n_countries": 15, "n_products": 10, "n_capabilities": 6, "min_requirements": 1, "max_requirements": 3,
                       "noise": 0.0, "acquisition_rate": 0.0, "years": 6}},
    "eval_deltas": [1, 3]})");
  const ExportPanel panel = load_panel(c);
  const DescribeResult d = describe_panel(panel, c);
  ASSERT_EQ(d.density.size(), 6u);
  for (const auto& [year, dens] : d.density) EXPECT_EQ(dens, d.density[0].second);
  ASSERT_EQ(d.transitions.size(), 2u);
  for (const auto& [delta, t] : d.transitions) {
    EXPECT_EQ(t.probability[0][0], 1.0);
    EXPECT_EQ(t.probability[1][1], 1.0);
    EXPECT_EQ(t.counts[0][1] + t.counts[1][0], 0u);
  }
  // Pooled over every start year: 5 pairs at delta 1, 3 at delta 3.
  EXPECT_EQ(d.transitions[0].second.support[0] + d.transitions[0].second.support[1], 5u * 150u);
  EXPECT_EQ(d.transitions[1].second.support[0] + d.transitions[1].second.support[1], 3u * 150u);
  c.eval_deltas = {6};
  EXPECT_THROW(describe_panel(panel, c), ValidationError);

  const fs::path dir = scratch_dir("describe");
  const auto files = write_describe(d, dir);
  EXPECT_EQ(slurp(dir / "transitions.csv").substr(0, 27), "delta,p00,p01,p10,p11,n0,n1");
  EXPECT_EQ(files.size(), 2u);
}

TEST(Sweep, NormalizedBySmallestDelta) {
  const ExperimentConfig c = small_config();
  const ExportPanel panel = load_panel(c);
  const std::vector<SweepRow> rows = delta_sweep(panel, c);
  EXPECT_EQ(rows.size(), 3u * 2u * 3u * 9u);
  std::size_t checked = 0;
  for (const SweepRow& r : rows) {
    if (r.delta == 1 && r.normalized) {
      EXPECT_DOUBLE_EQ(*r.normalized, 1.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);

  ExperimentConfig bad = c;
  bad.eval_deltas = {1, 7};
  try {
    delta_sweep(panel, bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("maximum for this window and delta_model is 6"),
              std::string::npos);
  }
}

TEST(Sweep, MaximalDeltaUsesSingleTrainingYear) {
  ExperimentConfig c = small_config();
  c.eval_deltas = {6};
  c.models = {parse_config(R"({"data": {"csv": "x"}, "model": {"kind": "tree"}})").models[0]};
  const ExportPanel panel = load_panel(c);
  const auto rows = delta_sweep(panel, c);
  EXPECT_FALSE(rows.empty());
}

TEST(Importance, RankedAndNormalized) {
  const ExperimentConfig c = small_config();
  const ExportPanel panel = load_panel(c);
  const ImportanceResult imp = product_importance(panel, c, panel.products()[3]);
  ASSERT_EQ(imp.ranked.size(), panel.num_products());
  double total = 0;
  for (std::size_t i = 0; i < imp.ranked.size(); ++i) {
    total += imp.ranked[i].second;
    if (i > 0) {
      EXPECT_GE(imp.ranked[i - 1].second, imp.ranked[i].second);
    }
  }
  if (total > 0) {
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_THROW(product_importance(panel, c, "NOPE"), LookupError);
}

TEST(Manifest, HashesAndVolatileEntries) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const fs::path dir = scratch_dir("manifest");
  fs::create_directories(dir);
  std::ofstream(dir / "a.txt") << "abc";
  std::ofstream(dir / "t.json") << "{}";
  write_manifest(dir, {"a.txt"}, {"t.json"});
  const auto doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(doc["format"], "exportcast-manifest");
  ASSERT_EQ(doc["artifacts"].size(), 2u);
  EXPECT_EQ(doc["artifacts"][0]["sha256"], sha256_hex("abc"));
  EXPECT_TRUE(doc["artifacts"][1]["sha256"].is_null());
  EXPECT_TRUE(doc["artifacts"][1]["volatile"].get<bool>());
}
