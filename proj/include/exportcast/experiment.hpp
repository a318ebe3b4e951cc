#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exportcast/csv_io.hpp"
#include "exportcast/dataset.hpp"
#include "exportcast/metrics.hpp"
#include "exportcast/model.hpp"
#include "exportcast/synth.hpp"

namespace exportcast {

struct DataSource {
  std::optional<std::filesystem::path> csv;
  ColumnMapping columns;
  std::optional<WorldParams> synth;
  int synth_years = 12;
  int synth_first_year = 2000;
  std::optional<int> aggregate_digits;
};

struct CvConfig {
  bool enabled = false;
  int k = 13;
  std::uint64_t seed = 0;
};

// One experiment, read from a single JSON document. Every numeric default
// here is a configuration value and may be overridden.
struct ExperimentConfig {
  DataSource data;
  std::optional<int> first_year;  // defaults to the panel's first year
  std::optional<int> last_year;   // defaults to the panel's last year
  int delta_model = 5;
  std::vector<int> eval_deltas{1, 2, 3, 4, 5};
  Task task = Task::kActivations;
  double rca_threshold = 1.0;
  double inactivity_threshold = 0.25;
  std::vector<ModelSpec> models;
  CvConfig cv;
  std::size_t precision_k = 10;
  std::size_t calibration_bins = 10;
  TrainingWindow window = TrainingWindow::kLeakFree;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Reads or generates the panel named by the config, then applies product
// aggregation when requested.
ExportPanel load_panel(const ExperimentConfig& config);

struct YearWindow {
  int first = 0;
  int last = 0;
};

// Resolves the configured window against the panel and checks the
// experiment invariants.
YearWindow resolve_window(const ExperimentConfig& config, const ExportPanel& panel);

// Metadata of one trained (product, fold) model.
struct UnitRecord {
  std::size_t product = 0;
  int fold = -1;
  std::uint64_t seed = 0;
  std::size_t train_rows = 0;
  std::vector<std::size_t> train_countries;      // distinct, ascending
  std::vector<std::size_t> predicted_countries;  // ascending
  double seconds = 0.0;                          // wall clock, not reproducible
};

struct ScoringResult {
  ScoreMatrix scores;
  std::vector<UnitRecord> units;
};

// Trains one model per product (per fold when cross-validation is on) on
// the stack for `train_last_year` and scores R^(test_input_year).
// Independent units run on up to `workers` threads; results do not depend
// on the worker count.
ScoringResult train_and_score(const ExportPanel& panel, const ExperimentConfig& config,
                              const ModelSpec& spec, std::size_t model_index,
                              int first_year, int train_last_year, int delta,
                              int test_input_year, int target_year);

// Throws AssemblyError unless every country is predicted exactly once per
// product, and only by models whose training rows excluded it.
void audit_cv_coverage(const std::vector<UnitRecord>& units, std::size_t num_countries,
                       std::size_t num_products, bool cross_validated);

struct ModelRun {
  ModelSpec spec;
  ScoringResult scoring;
  std::array<MetricsReport, 2> reports;  // full, activations
};

struct RunResult {
  YearWindow window;
  TestSet test;
  ActivationMask mask;
  std::vector<ModelRun> models;
};

RunResult run_experiment(const ExportPanel& panel, const ExperimentConfig& config);

struct DescribeResult {
  std::vector<std::pair<int, double>> density;  // year -> density
  std::vector<std::pair<int, TransitionMatrix>> transitions;  // delta -> pooled
};

// Presence density per year and the 2x2 transition matrix for each
// evaluation delta, pooled over every start year that fits the panel.
DescribeResult describe_panel(const ExportPanel& panel, const ExperimentConfig& config);

struct SweepRow {
  std::string model;
  Task task = Task::kFull;
  std::string indicator;
  int delta = 0;
  std::optional<double> value;
  std::optional<double> normalized;
};

// Trains with config.delta_model on years up to anchor = last - max(delta),
// then scores R^(anchor) against M^(anchor + delta) for each evaluation
// delta. Values are normalized by the smallest delta of the list.
std::vector<SweepRow> delta_sweep(const ExportPanel& panel, const ExperimentConfig& config);

struct ImportanceResult {
  std::vector<std::pair<std::size_t, double>> ranked;  // product index, importance
  Model model;
};

// Fits the first tree-based model of the config for `product` on every
// country and ranks the features by importance.
ImportanceResult product_importance(const ExportPanel& panel, const ExperimentConfig& config,
                                    const std::string& product);

// Files written by the CLI commands. Each returns the written paths relative
// to `out_dir`.
std::vector<std::filesystem::path> write_describe(const DescribeResult& result,
                                                  const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> write_run(const RunResult& result, const ExportPanel& panel,
                                             const ExperimentConfig& config,
                                             const std::filesystem::path& out_dir);
// Per-unit wall-clock seconds; these differ between runs.
std::vector<std::filesystem::path> write_timings(const RunResult& result, const ExportPanel& panel,
                                                 const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> write_sweep(const std::vector<SweepRow>& rows,
                                               const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> write_calibration(const RunResult& result,
                                                     const ExperimentConfig& config,
                                                     const std::filesystem::path& out_dir);

// manifest.json: every listed file with its SHA-256. Files named in
// `volatile_files` are listed without a hash.
void write_manifest(const std::filesystem::path& out_dir,
                    const std::vector<std::filesystem::path>& files,
                    const std::vector<std::filesystem::path>& volatile_files = {});

std::string sha256_hex(std::string_view data);

}  // namespace exportcast
