#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "exportcast/experiment.hpp"
#include "exportcast/forest.hpp"
#include "exportcast/boosting.hpp"

namespace fs = std::filesystem;
using namespace exportcast;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("--config", c.config, "experiment configuration (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--workers", c.workers, "maximum concurrent training units");
  cmd->add_option("--out", c.out, "output directory");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig config = load_config(c.config);
  if (c.seed) config.seed = *c.seed;
  if (c.workers) config.workers = std::max<std::size_t>(1, *c.workers);
  if (c.out) config.out_dir = *c.out;
  return config;
}

const std::vector<Tree>* trees_of(const Model& model) {
  if (const auto* m = std::get_if<ForestModel>(&model)) return &m->trees;
  if (const auto* m = std::get_if<BoostedModel>(&model)) return &m->trees;
  return nullptr;
}

void print_reports(const RunResult& result) {
  std::printf("%-12s %-12s %8s %8s %8s %8s %8s\n", "model", "task", "auc_roc", "auc_pr", "f1",
              "p@k", "mcc");
  for (const ModelRun& run : result.models) {
    for (const MetricsReport& r : run.reports) {
      std::printf("%-12s %-12s %8.4f %8.4f %8.4f %8.4f %8.4f\n", run.spec.label().c_str(),
                  std::string(to_string(r.task)).c_str(), r.auc_roc.value_or(NAN),
                  r.auc_pr.value_or(NAN), r.f1, r.precision_at_k.value_or(NAN), r.mcc);
    }
  }
}

int cmd_describe(const Common& c) {
  const ExperimentConfig config = resolve(c);
  const ExportPanel panel = load_panel(config);
  const auto files = write_describe(describe_panel(panel, config), config.out_dir);
  write_manifest(config.out_dir, files);
  return 0;
}

int cmd_run(const Common& c) {
  const ExperimentConfig config = resolve(c);
  const ExportPanel panel = load_panel(config);
  const RunResult result = run_experiment(panel, config);
  auto files = write_run(result, panel, config, config.out_dir);
  const auto calib = write_calibration(result, config, config.out_dir);
  files.insert(files.end(), calib.begin(), calib.end());
  write_manifest(config.out_dir, files, write_timings(result, panel, config.out_dir));
  print_reports(result);
  return 0;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig config = resolve(c);
  const ExportPanel panel = load_panel(config);
  write_manifest(config.out_dir, write_sweep(delta_sweep(panel, config), config.out_dir));
  return 0;
}

int cmd_importance(const Common& c, const std::string& product, std::optional<std::size_t> tree) {
  const ExperimentConfig config = resolve(c);
  const ExportPanel panel = load_panel(config);
  const ImportanceResult result = product_importance(panel, config, product);
  fs::create_directories(config.out_dir);
  std::vector<fs::path> files{"importance_" + product + ".csv"};
  {
    std::ofstream out(config.out_dir / files[0]);
    out << "product,importance\n";
    for (const auto& [f, v] : result.ranked) {
      out << panel.products()[f] << ',' << format_double(v) << '\n';
    }
  }
  if (tree) {
    const Tree* selected = nullptr;
    if (const auto* m = std::get_if<DecisionTreeModel>(&result.model)) {
      if (*tree == 0) selected = &m->tree;
    } else if (const auto* trees = trees_of(result.model); trees && *tree < trees->size()) {
      selected = &(*trees)[*tree];
    }
    if (!selected) throw LookupError("model has no tree " + std::to_string(*tree));
    files.emplace_back("tree_" + product + "_" + std::to_string(*tree) + ".dot");
    std::ofstream out(config.out_dir / files.back());
    out << export_tree_dot(*selected, panel.products());
  }
  write_manifest(config.out_dir, files);
  return 0;
}

int cmd_calibrate(const Common& c) {
  const ExperimentConfig config = resolve(c);
  const ExportPanel panel = load_panel(config);
  const RunResult result = run_experiment(panel, config);
  write_manifest(config.out_dir, write_calibration(result, config, config.out_dir));
  return 0;
}

int cmd_synth(const Common& c) {
  ExperimentConfig config;
  if (!c.config.empty()) config = load_config(c.config);
  WorldParams params = config.data.synth.value_or(WorldParams{});
  if (c.seed) params.seed = *c.seed;
  const fs::path out_dir = c.out ? fs::path(*c.out) : config.out_dir;
  const CapabilityWorld world = make_world(params);
  const SyntheticPanel synthetic =
      generate_panel(world, config.data.synth_years, config.data.synth_first_year);
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "panel.csv");
    write_export_csv(out, synthetic.panel);
  }
  {
    std::ofstream out(out_dir / "ground_truth.json");
    write_ground_truth(out, world, synthetic);
  }
  write_manifest(out_dir, {"panel.csv", "ground_truth.json"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast new export products from RCA panels"};
  app.require_subcommand(1);
  Common common;

  add_common(app.add_subcommand("describe", "density per year and transition matrices"), common);
  add_common(app.add_subcommand("run", "train, predict and evaluate"), common);
  add_common(app.add_subcommand("delta-sweep", "indicators versus forecast horizon"), common);
  auto* importance = app.add_subcommand("importance", "feature importance for one product");
  add_common(importance, common);
  std::string product;
  std::optional<std::size_t> tree;
  importance->add_option("--product", product, "product code")->required();
  importance->add_option("--tree", tree, "also write tree N as DOT");
  add_common(app.add_subcommand("calibrate", "calibration curves"), common);
  add_common(app.add_subcommand("synth", "generate a synthetic capability panel"), common, false);

  CLI11_PARSE(app, argc, argv);
  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "describe") return cmd_describe(common);
    if (name == "run") return cmd_run(common);
    if (name == "delta-sweep") return cmd_sweep(common);
    if (name == "importance") return cmd_importance(common, product, tree);
    if (name == "calibrate") return cmd_calibrate(common);
    return cmd_synth(common);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const LookupError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
