#include "exportcast/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "exportcast/csv_io.hpp"

namespace exportcast {

FeatureBlock::FeatureBlock(Matrix x) : x_(std::move(x)) {
  const std::size_t n = rows();
  order_.resize(n * cols());
  for (std::size_t f = 0; f < cols(); ++f) {
    auto first = order_.begin() + static_cast<std::ptrdiff_t>(f * n);
    std::iota(first, first + static_cast<std::ptrdiff_t>(n), 0u);
    const auto col = x_.col(static_cast<Eigen::Index>(f));
    std::stable_sort(first, first + static_cast<std::ptrdiff_t>(n),
                     [&col](std::uint32_t a, std::uint32_t b) {
                       return col(a) < col(b);
                     });
  }
}

SupervisedSet TrainingStack::for_product(std::size_t product) const {
  if (product >= static_cast<std::size_t>(labels.cols())) {
    throw LookupError("product index " + std::to_string(product) +
                      " out of range");
  }
  SupervisedSet set;
  set.rows = rows;
  set.features = features;
  set.labels = labels.col(static_cast<Eigen::Index>(product));
  set.target_product = product;
  set.label_offset = label_offset;
  return set;
}

TrainingStack build_training_stack(const ExportPanel& panel, int first_year,
                                   int last_year, int delta,
                                   double rca_threshold,
                                   TrainingWindow window) {
  if (delta < 1) throw ValidationError("delta must be >= 1");
  if (first_year + 2 * delta > last_year) {
    throw ValidationError("training window too short: need last_year - first_year >= " +
                          std::to_string(2 * delta) + " years for delta " +
                          std::to_string(delta));
  }
  const int last_feature_year = window == TrainingWindow::kLeakFree
                                    ? last_year - 2 * delta
                                    : last_year - delta;
  if (!panel.has_year(first_year) || !panel.has_year(last_feature_year + delta)) {
    throw LookupError("training years [" + std::to_string(first_year) + ", " +
                      std::to_string(last_feature_year + delta) +
                      "] not covered by panel");
  }
  const auto countries = static_cast<Eigen::Index>(panel.num_countries());
  const auto products = static_cast<Eigen::Index>(panel.num_products());
  const int num_years = last_feature_year - first_year + 1;

  TrainingStack stack;
  stack.label_offset = delta;
  Matrix x(num_years * countries, products);
  stack.labels.resize(num_years * countries, products);
  stack.rows.reserve(static_cast<std::size_t>(num_years * countries));
  for (int y = first_year; y <= last_feature_year; ++y) {
    const Eigen::Index offset = (y - first_year) * countries;
    x.middleRows(offset, countries) = compute_rca(panel, y).values;
    stack.labels.middleRows(offset, countries) =
        binarize(compute_rca(panel, y + delta), rca_threshold).values;
    for (Eigen::Index c = 0; c < countries; ++c) {
      stack.rows.push_back({static_cast<std::size_t>(c), y});
    }
  }
  stack.features = std::make_shared<const FeatureBlock>(std::move(x));
  return stack;
}

SupervisedSet build_training(const ExportPanel& panel,
                             const std::string& target_product, int first_year,
                             int last_year, int delta, double rca_threshold) {
  const std::size_t target = panel.product_index(target_product);
  return build_training_stack(panel, first_year, last_year, delta, rca_threshold)
      .for_product(target);
}

TestSet build_test(const ExportPanel& panel, int last_year, int delta,
                   double rca_threshold) {
  if (delta < 1) throw ValidationError("delta must be >= 1");
  return {compute_rca(panel, last_year - delta),
          binarize(compute_rca(panel, last_year), rca_threshold)};
}

std::vector<std::size_t> FoldPlan::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < assignment.size(); ++c) {
    if (assignment[c] == fold) out.push_back(c);
  }
  return out;
}

FoldPlan make_folds(std::size_t num_countries, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > num_countries) {
    throw ValidationError("fold count k=" + std::to_string(k) +
                          " must lie in [2, " + std::to_string(num_countries) +
                          "]");
  }
  std::vector<std::size_t> order(num_countries);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(num_countries, 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.assignment[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan make_folds(const std::vector<std::string>& countries, int k,
                    std::uint64_t seed) {
  return make_folds(countries.size(), k, seed);
}

namespace {

std::vector<Eigen::Index> select_rows(const std::vector<RowId>& rows,
                                      const FoldPlan& plan, int fold,
                                      FoldRole role) {
  if (fold < 0 || fold >= plan.k) {
    throw ValidationError("fold " + std::to_string(fold) + " out of range [0, " +
                          std::to_string(plan.k) + ")");
  }
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].country >= plan.assignment.size()) {
      throw ValidationError("fold plan does not cover country index " +
                            std::to_string(rows[i].country));
    }
    const bool in_fold = plan.contains(fold, rows[i].country);
    if (in_fold == (role == FoldRole::kTest)) {
      keep.push_back(static_cast<Eigen::Index>(i));
    }
  }
  if (keep.empty()) throw ValidationError("fold filter left no rows");
  return keep;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<Eigen::Index>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (Eigen::Index i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

SupervisedSet cv_filter(const SupervisedSet& set, const FoldPlan& plan, int fold,
                        FoldRole role) {
  const auto keep = select_rows(set.rows, plan, fold, role);
  SupervisedSet out;
  out.rows = gather(set.rows, keep);
  out.features = std::make_shared<const FeatureBlock>(set.x()(keep, Eigen::all));
  out.labels = set.labels(keep);
  out.target_product = set.target_product;
  out.label_offset = set.label_offset;
  return out;
}

TrainingStack cv_filter(const TrainingStack& stack, const FoldPlan& plan,
                        int fold, FoldRole role) {
  const auto keep = select_rows(stack.rows, plan, fold, role);
  TrainingStack out;
  out.rows = gather(stack.rows, keep);
  out.features =
      std::make_shared<const FeatureBlock>(stack.features->x()(keep, Eigen::all));
  out.labels = stack.labels(keep, Eigen::all);
  out.label_offset = stack.label_offset;
  return out;
}

void write_supervised_csv(std::ostream& out, const SupervisedSet& set,
                          const ExportPanel& panel) {
  out << "country,year";
  for (const auto& code : panel.products()) out << ',' << code;
  out << ",label\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << panel.countries()[set.rows[i].country] << ',' << set.rows[i].year;
    for (Eigen::Index f = 0; f < set.x().cols(); ++f) {
      out << ',' << format_double(set.x()(static_cast<Eigen::Index>(i), f));
    }
    out << ',' << static_cast<int>(set.labels(static_cast<Eigen::Index>(i))) << '\n';
  }
}

}  // namespace exportcast
