#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exportcast/model.hpp"
#include "exportcast/trade_data.hpp"

namespace exportcast {

enum class Task { kFull, kActivations };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

// Flattened evaluation cells. `countries[i]` and `products[i]` locate cell i
// in the score matrix.
struct EvalSet {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> countries;
  std::vector<std::size_t> products;

  std::size_t size() const { return scores.size(); }
};

// kFull keeps every cell; kActivations keeps the cells flagged by `mask`.
EvalSet restrict_to_task(const ScoreMatrix& scores, const PresenceMatrix& truth,
                         Task task, const ActivationMask* mask = nullptr);

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// A prediction is positive when score >= threshold.
ConfusionMatrix confusion_at(std::span<const double> scores,
                             std::span<const std::uint8_t> labels, double threshold);

// A rate whose denominator vanished is reported as 0 with `degenerate` set.
struct Indicator {
  double value = 0.0;
  bool degenerate = false;
};

Indicator precision(const ConfusionMatrix& m);
Indicator recall(const ConfusionMatrix& m);
Indicator f1_score(const ConfusionMatrix& m);
Indicator accuracy(const ConfusionMatrix& m);
Indicator negative_predictive_value(const ConfusionMatrix& m);
Indicator matthews(const ConfusionMatrix& m);

struct ThresholdChoice {
  double threshold = 0.0;  // +inf when predicting nothing is optimal
  double f1 = 0.0;
};

// Scans every distinct score (and +inf) as a threshold. Ties in F1 go to
// the lowest threshold.
ThresholdChoice best_f1_threshold(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels);

// P(s+ > s-) + P(s+ = s-)/2 via midranks.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Step-wise area: sum over distinct thresholds of (recall gain) * precision.
double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Per country, the k highest-scored cells of the set (ties by product
// index) are checked against their labels; precision uses the number of
// cells actually taken. Countries without cells are skipped.
double mean_precision_at_k(const EvalSet& set, std::size_t k);
double mean_precision_at_k(const ScoreMatrix& scores, const PresenceMatrix& truth,
                           std::size_t k, const ActivationMask* mask = nullptr);

struct CalibrationBin {
  double low = 0.0;
  double high = 0.0;
  double mean_score = 0.0;
  double positive_fraction = 0.0;
  double std = 0.0;  // binomial sqrt(f (1 - f) / n)
  std::size_t count = 0;
};

struct CalibrationCurve {
  std::vector<CalibrationBin> bins;
  std::size_t zero_score_cells = 0;  // excluded from binning
};

// Log-spaced bins between the lower bound (smallest positive score by
// default) and the maximum score. Bin i covers (edge_i, edge_{i+1}]; the
// first bin also takes every positive score at or below its upper edge.
// Empty bins carry NaN statistics.
CalibrationCurve calibration_curve(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels,
                                   std::size_t n_bins,
                                   std::optional<double> lower_bound = std::nullopt);

void write_calibration_csv(std::ostream& out, const CalibrationCurve& curve);

// Spearman rank correlation with midranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct MetricsReport {
  Task task = Task::kFull;
  std::size_t k = 10;
  std::size_t cells = 0;
  std::size_t positives = 0;
  std::optional<double> auc_roc;
  double f1 = 0.0;
  std::optional<double> precision_at_k;
  double precision = 0.0;
  double recall = 0.0;
  double mcc = 0.0;
  std::optional<double> auc_pr;
  double accuracy = 0.0;
  double npv = 0.0;
  double threshold = 0.0;
  ConfusionMatrix confusion;
  // Names of indicators that hit a 0/0 or an unmet precondition.
  std::vector<std::string> degenerate;
};

// Full indicator set at the F1-optimal threshold. Indicators whose
// preconditions fail (a single class present) are left empty and listed
// in `degenerate` instead of throwing.
MetricsReport evaluate(const EvalSet& set, Task task, std::size_t k);

std::string report_to_json(const MetricsReport& report);

}  // namespace exportcast
