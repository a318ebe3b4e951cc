#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "exportcast/common.hpp"

namespace exportcast {

// Yearly country x product export values in USD. Immutable after
// construction; the constructor enforces the panel invariants.
class ExportPanel {
 public:
  ExportPanel(std::vector<int> years, std::vector<std::string> countries,
              std::vector<std::string> products, std::vector<Matrix> values);

  const std::vector<int>& years() const { return years_; }
  const std::vector<std::string>& countries() const { return countries_; }
  const std::vector<std::string>& products() const { return products_; }
  std::size_t num_countries() const { return countries_.size(); }
  std::size_t num_products() const { return products_.size(); }
  int first_year() const { return years_.front(); }
  int last_year() const { return years_.back(); }

  bool has_year(int year) const;
  // Throws LookupError for unknown keys.
  const Matrix& values(int year) const;
  std::size_t country_index(const std::string& code) const;
  std::size_t product_index(const std::string& code) const;

 private:
  std::vector<int> years_;
  std::vector<std::string> countries_;
  std::vector<std::string> products_;
  std::vector<Matrix> values_;
  std::unordered_map<std::string, std::size_t> country_lookup_;
  std::unordered_map<std::string, std::size_t> product_lookup_;
};

struct RcaMatrix {
  int year = 0;
  Matrix values;
};

struct PresenceMatrix {
  int year = 0;
  BinaryMatrix values;
};

struct ActivationMask {
  BinaryMatrix values;
  int first_year = 0;
  int last_year = 0;
  double inactivity_threshold = 0.25;
};

// Balassa index of a single country x product value matrix. Cells whose
// country total or product total is zero map to 0.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> balassa_rca(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const DenseVector<Scalar> country_totals = v.rowwise().sum();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> product_totals =
      v.colwise().sum();
  const Scalar total = country_totals.sum();
  DenseMatrix<Scalar> r = DenseMatrix<Scalar>::Zero(v.rows(), v.cols());
  if (total <= Scalar(0)) return r;
  for (Eigen::Index p = 0; p < v.cols(); ++p) {
    if (product_totals(p) <= Scalar(0)) continue;
    const Scalar world_share = product_totals(p) / total;
    for (Eigen::Index c = 0; c < v.rows(); ++c) {
      if (country_totals(c) <= Scalar(0)) continue;
      r(c, p) = (v(c, p) / country_totals(c)) / world_share;
    }
  }
  return r;
}

// Elementwise r >= threshold.
template <typename Derived>
BinaryMatrix at_least(const Eigen::MatrixBase<Derived>& r,
                      typename Derived::Scalar threshold) {
  return (r.array() >= threshold).template cast<std::uint8_t>().matrix();
}

RcaMatrix compute_rca(const ExportPanel& panel, int year);

PresenceMatrix binarize(const RcaMatrix& rca, double threshold = 1.0);

// Cells whose RCA stayed strictly below `inactivity_threshold` in every
// year of [first_year, last_year].
ActivationMask activation_candidates(const ExportPanel& panel, int first_year,
                                     int last_year,
                                     double inactivity_threshold = 0.25);

// Groups products by the first `digits` characters of their code and sums
// the values of each group.
ExportPanel aggregate_products(const ExportPanel& panel, int digits);

// Row a holds P(end = b | start = a). A row without support is empty.
struct TransitionMatrix {
  std::array<std::array<std::optional<double>, 2>, 2> probability;
  std::array<std::size_t, 2> support{0, 0};
  std::array<std::array<std::size_t, 2>, 2> counts{};
};

// Same, from raw (start, end) cell counts.
TransitionMatrix transitions_from_counts(
    const std::array<std::array<std::size_t, 2>, 2>& counts);

TransitionMatrix transition_probabilities(const PresenceMatrix& start,
                                          const PresenceMatrix& end);

// Fraction of ones.
double density(const PresenceMatrix& m);

}  // namespace exportcast
