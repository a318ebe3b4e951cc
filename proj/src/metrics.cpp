#include "exportcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "exportcast/csv_io.hpp"

namespace exportcast {

namespace {

void check_lengths(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scores and labels differ in length");
  }
  if (scores.empty()) throw ValidationError("empty evaluation set");
}

std::size_t count_positives(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](std::uint8_t l) { return l != 0; }));
}

// Indices ordered by descending score; ties keep index order.
std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  return rank;
}

Indicator ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

}  // namespace

std::string_view to_string(Task task) {
  return task == Task::kFull ? "full" : "activations";
}

Task parse_task(std::string_view name) {
  if (name == "full") return Task::kFull;
  if (name == "activations") return Task::kActivations;
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

EvalSet restrict_to_task(const ScoreMatrix& scores, const PresenceMatrix& truth,
                         Task task, const ActivationMask* mask) {
  if (scores.values.rows() != truth.values.rows() ||
      scores.values.cols() != truth.values.cols()) {
    throw ValidationError("score and truth matrices have different axes");
  }
  if (task == Task::kActivations) {
    if (mask == nullptr) throw ValidationError("activations task needs a mask");
    if (mask->values.rows() != truth.values.rows() ||
        mask->values.cols() != truth.values.cols()) {
      throw ValidationError("activation mask has different axes");
    }
  }
  EvalSet out;
  for (Eigen::Index c = 0; c < truth.values.rows(); ++c) {
    for (Eigen::Index p = 0; p < truth.values.cols(); ++p) {
      if (task == Task::kActivations && mask->values(c, p) == 0) continue;
      out.scores.push_back(scores.values(c, p));
      out.labels.push_back(truth.values(c, p) ? 1 : 0);
      out.countries.push_back(static_cast<std::size_t>(c));
      out.products.push_back(static_cast<std::size_t>(p));
    }
  }
  if (out.scores.empty()) throw ValidationError("empty evaluation set");
  return out;
}

ConfusionMatrix confusion_at(std::span<const double> scores,
                             std::span<const std::uint8_t> labels, double threshold) {
  check_lengths(scores, labels);
  ConfusionMatrix m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      (predicted ? m.tp : m.fn) += 1;
    } else {
      (predicted ? m.fp : m.tn) += 1;
    }
  }
  return m;
}

Indicator precision(const ConfusionMatrix& m) { return ratio(m.tp, m.tp + m.fp); }
Indicator recall(const ConfusionMatrix& m) { return ratio(m.tp, m.tp + m.fn); }
Indicator f1_score(const ConfusionMatrix& m) {
  return ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn);
}
Indicator accuracy(const ConfusionMatrix& m) { return ratio(m.tp + m.tn, m.total()); }
Indicator negative_predictive_value(const ConfusionMatrix& m) {
  return ratio(m.tn, m.tn + m.fn);
}

Indicator matthews(const ConfusionMatrix& m) {
  const double tp = static_cast<double>(m.tp);
  const double fp = static_cast<double>(m.fp);
  const double fn = static_cast<double>(m.fn);
  const double tn = static_cast<double>(m.tn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return {0.0, true};
  return {(tp * tn - fp * fn) / std::sqrt(den), false};
}

ThresholdChoice best_f1_threshold(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const std::uint64_t positives = count_positives(labels);
  if (positives == 0) throw ValidationError("best F1 threshold needs a positive label");
  ThresholdChoice best{std::numeric_limits<double>::infinity(), 0.0};
  const auto order = order_descending(scores);
  ConfusionMatrix m;
  m.fn = positives;
  m.tn = scores.size() - positives;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      if (labels[order[i]]) {
        ++m.tp;
        --m.fn;
      } else {
        ++m.fp;
        --m.tn;
      }
    }
    const double f1 = f1_score(m).value;
    if (f1 >= best.f1) best = {t, f1};
  }
  return best;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const std::size_t pos = count_positives(labels);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("ROC-AUC needs both classes");
  const auto rank = midranks(scores);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) sum += rank[i];
  }
  const double p = static_cast<double>(pos);
  return (sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const std::size_t positives = count_positives(labels);
  if (positives == 0) throw ValidationError("PR-AUC needs a positive label");
  const auto order = order_descending(scores);
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  double area = 0.0;
  double last_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      (labels[order[i]] ? tp : fp) += 1;
    }
    const double r = static_cast<double>(tp) / static_cast<double>(positives);
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (r - last_recall) * p;
    last_recall = r;
  }
  return area;
}

double mean_precision_at_k(const EvalSet& set, std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::map<std::size_t, std::vector<std::size_t>> by_country;
  for (std::size_t i = 0; i < set.size(); ++i) by_country[set.countries[i]].push_back(i);
  if (by_country.empty()) throw ValidationError("no candidate cells for precision@k");
  double total = 0.0;
  for (auto& [country, cells] : by_country) {
    std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
      if (set.scores[a] != set.scores[b]) return set.scores[a] > set.scores[b];
      return set.products[a] < set.products[b];
    });
    const std::size_t taken = std::min(k, cells.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < taken; ++i) hits += set.labels[cells[i]] ? 1 : 0;
    total += static_cast<double>(hits) / static_cast<double>(taken);
  }
  return total / static_cast<double>(by_country.size());
}

double mean_precision_at_k(const ScoreMatrix& scores, const PresenceMatrix& truth,
                           std::size_t k, const ActivationMask* mask) {
  return mean_precision_at_k(
      restrict_to_task(scores, truth, mask ? Task::kActivations : Task::kFull, mask), k);
}

CalibrationCurve calibration_curve(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels,
                                   std::size_t n_bins, std::optional<double> lower_bound) {
  check_lengths(scores, labels);
  if (n_bins < 2) throw ValidationError("calibration needs at least 2 bins");
  CalibrationCurve curve;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double s : scores) {
    if (s > 0.0) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    } else {
      ++curve.zero_score_cells;
    }
  }
  if (hi <= 0.0) throw ValidationError("calibration needs positive scores");
  if (lower_bound) {
    if (!(*lower_bound > 0.0) || *lower_bound >= hi) {
      throw ValidationError("calibration lower bound must lie in (0, max score)");
    }
    lo = *lower_bound;
  }
  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    edges[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n_bins));
  }
  edges.front() = lo;
  edges.back() = hi;

  std::vector<double> score_sum(n_bins, 0.0);
  std::vector<std::size_t> positives(n_bins, 0);
  curve.bins.resize(n_bins);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] > 0.0)) continue;
    auto it = std::lower_bound(edges.begin() + 1, edges.end(), scores[i]);
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin() - 1),
                                         n_bins - 1);
    ++curve.bins[b].count;
    score_sum[b] += scores[i];
    positives[b] += labels[i] ? 1 : 0;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t b = 0; b < n_bins; ++b) {
    CalibrationBin& bin = curve.bins[b];
    bin.low = edges[b];
    bin.high = edges[b + 1];
    if (bin.count == 0) {
      bin.mean_score = bin.positive_fraction = bin.std = nan;
      continue;
    }
    const double n = static_cast<double>(bin.count);
    bin.mean_score = score_sum[b] / n;
    bin.positive_fraction = static_cast<double>(positives[b]) / n;
    bin.std = std::sqrt(bin.positive_fraction * (1.0 - bin.positive_fraction) / n);
  }
  return curve;
}

void write_calibration_csv(std::ostream& out, const CalibrationCurve& curve) {
  out << "bin_low,bin_high,mean_score,positive_fraction,std,count\n";
  for (const CalibrationBin& b : curve.bins) {
    out << format_double(b.low) << ',' << format_double(b.high) << ','
        << format_double(b.mean_score) << ',' << format_double(b.positive_fraction)
        << ',' << format_double(b.std) << ',' << b.count << '\n';
  }
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("spearman needs two equal-length samples of size >= 2");
  }
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const auto n = static_cast<Eigen::Index>(x.size());
  const Vector a = Eigen::Map<const Vector>(rx.data(), n).array() - (static_cast<double>(n) + 1) / 2;
  const Vector b = Eigen::Map<const Vector>(ry.data(), n).array() - (static_cast<double>(n) + 1) / 2;
  const double den = std::sqrt(a.squaredNorm() * b.squaredNorm());
  return den > 0.0 ? a.dot(b) / den : 0.0;
}

MetricsReport evaluate(const EvalSet& set, Task task, std::size_t k) {
  check_lengths(set.scores, set.labels);
  MetricsReport r;
  r.task = task;
  r.k = k;
  r.cells = set.size();
  r.positives = count_positives(set.labels);
  const bool both_classes = r.positives > 0 && r.positives < r.cells;

  if (r.positives > 0) {
    const ThresholdChoice choice = best_f1_threshold(set.scores, set.labels);
    r.threshold = choice.threshold;
    r.auc_pr = pr_auc(set.scores, set.labels);
  } else {
    r.threshold = std::numeric_limits<double>::infinity();
    r.degenerate.push_back("auc_pr");
  }
  if (both_classes) {
    r.auc_roc = roc_auc(set.scores, set.labels);
  } else {
    r.degenerate.push_back("auc_roc");
  }
  r.precision_at_k = mean_precision_at_k(set, k);

  r.confusion = confusion_at(set.scores, set.labels, r.threshold);
  auto take = [&r](const char* name, Indicator i) {
    if (i.degenerate) r.degenerate.push_back(name);
    return i.value;
  };
  r.precision = take("precision", precision(r.confusion));
  r.recall = take("recall", recall(r.confusion));
  r.f1 = take("f1", f1_score(r.confusion));
  r.mcc = take("mcc", matthews(r.confusion));
  r.accuracy = take("accuracy", accuracy(r.confusion));
  r.npv = take("npv", negative_predictive_value(r.confusion));
  return r;
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json doc;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  doc["task"] = to_string(r.task);
  doc["cells"] = r.cells;
  doc["positives"] = r.positives;
  doc["auc_roc"] = opt(r.auc_roc);
  doc["f1"] = r.f1;
  doc["precision_at_k"] = opt(r.precision_at_k);
  doc["k"] = r.k;
  doc["precision"] = r.precision;
  doc["recall"] = r.recall;
  doc["mcc"] = r.mcc;
  doc["auc_pr"] = opt(r.auc_pr);
  doc["accuracy"] = r.accuracy;
  doc["npv"] = r.npv;
  doc["threshold"] = std::isfinite(r.threshold) ? nlohmann::ordered_json(r.threshold)
                                                : nlohmann::ordered_json("inf");
  doc["tp"] = r.confusion.tp;
  doc["fp"] = r.confusion.fp;
  doc["fn"] = r.confusion.fn;
  doc["tn"] = r.confusion.tn;
  doc["degenerate"] = r.degenerate;
  return doc.dump(2) + "\n";
}

}  // namespace exportcast
