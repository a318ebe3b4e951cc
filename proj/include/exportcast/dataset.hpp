#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "exportcast/trade_data.hpp"

namespace exportcast {

struct RowId {
  std::size_t country = 0;
  int year = 0;
  friend bool operator==(const RowId&, const RowId&) = default;
};

// Feature matrix shared by every per-product set built from the same
// stack, with each column's row order presorted once for split search.
class FeatureBlock {
 public:
  explicit FeatureBlock(Matrix x);

  const Matrix& x() const { return x_; }
  std::size_t rows() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x_.cols()); }
  // Row indices ordered by ascending value of `feature`, ties by row index.
  std::span<const std::uint32_t> sorted(std::size_t feature) const {
    return {order_.data() + feature * rows(), rows()};
  }

 private:
  Matrix x_;
  std::vector<std::uint32_t> order_;
};

// Stacked RCA rows with binary labels for one target product.
struct SupervisedSet {
  std::vector<RowId> rows;
  std::shared_ptr<const FeatureBlock> features;
  BinaryVector labels;
  std::size_t target_product = 0;
  int label_offset = 0;

  std::size_t size() const { return rows.size(); }
  const Matrix& x() const { return features->x(); }
};

// Which years feed the training stack.
enum class TrainingWindow {
  // Features R^(y) for y in [y0, y_last - 2*delta]; labels up to y_last - delta.
  kLeakFree,
  // Features up to y_last - delta, so labels reach y_last itself. Exposed for
  // comparison only: the labels of the last stacked year are the test year.
  kThroughTestYear,
};

// The labels of every product for one feature stack; per-product sets are
// views that share the feature block.
struct TrainingStack {
  std::vector<RowId> rows;
  std::shared_ptr<const FeatureBlock> features;
  BinaryMatrix labels;  // rows x products
  int label_offset = 0;

  std::size_t size() const { return rows.size(); }
  SupervisedSet for_product(std::size_t product) const;
};

TrainingStack build_training_stack(
    const ExportPanel& panel, int first_year, int last_year, int delta,
    double rca_threshold = 1.0,
    TrainingWindow window = TrainingWindow::kLeakFree);

SupervisedSet build_training(const ExportPanel& panel,
                             const std::string& target_product, int first_year,
                             int last_year, int delta,
                             double rca_threshold = 1.0);

struct TestSet {
  RcaMatrix x;       // R^(y_last - delta)
  PresenceMatrix y;  // M^(y_last)
};

TestSet build_test(const ExportPanel& panel, int last_year, int delta,
                   double rca_threshold = 1.0);

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // country index -> fold

  std::vector<std::size_t> members(int fold) const;
  bool contains(int fold, std::size_t country) const {
    return assignment[country] == fold;
  }
};

// Uniformly random partition of countries into k folds whose sizes differ by
// at most one. Deterministic in `seed`.
FoldPlan make_folds(std::size_t num_countries, int k, std::uint64_t seed);
FoldPlan make_folds(const std::vector<std::string>& countries, int k,
                    std::uint64_t seed);

enum class FoldRole { kTrain, kTest };

SupervisedSet cv_filter(const SupervisedSet& set, const FoldPlan& plan,
                        int fold, FoldRole role);
TrainingStack cv_filter(const TrainingStack& stack, const FoldPlan& plan,
                        int fold, FoldRole role);

// Debug dump: country, year, one column per product, label.
void write_supervised_csv(std::ostream& out, const SupervisedSet& set,
                          const ExportPanel& panel);

}  // namespace exportcast
