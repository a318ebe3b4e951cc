#include "exportcast/trade_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace exportcast {

namespace {

std::unordered_map<std::string, std::size_t> index_codes(
    const std::vector<std::string>& codes, const char* what) {
  std::unordered_map<std::string, std::size_t> lookup;
  lookup.reserve(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!lookup.emplace(codes[i], i).second) {
      throw ValidationError(std::string("duplicate ") + what + " code '" +
                            codes[i] + "'");
    }
  }
  return lookup;
}

}  // namespace

ExportPanel::ExportPanel(std::vector<int> years,
                         std::vector<std::string> countries,
                         std::vector<std::string> products,
                         std::vector<Matrix> values)
    : years_(std::move(years)),
      countries_(std::move(countries)),
      products_(std::move(products)),
      values_(std::move(values)) {
  if (years_.empty()) throw ValidationError("panel has no years");
  if (countries_.empty()) throw ValidationError("panel has no countries");
  if (products_.empty()) throw ValidationError("panel has no products");
  for (std::size_t i = 1; i < years_.size(); ++i) {
    if (years_[i] <= years_[i - 1]) {
      throw ValidationError("years must be strictly increasing");
    }
    if (years_[i] != years_[i - 1] + 1) {
      throw ValidationError("year gap at " + std::to_string(years_[i - 1] + 1));
    }
  }
  if (values_.size() != years_.size()) {
    throw ValidationError("expected one value matrix per year");
  }
  for (std::size_t t = 0; t < values_.size(); ++t) {
    const Matrix& v = values_[t];
    if (static_cast<std::size_t>(v.rows()) != countries_.size() ||
        static_cast<std::size_t>(v.cols()) != products_.size()) {
      throw ValidationError("value matrix for year " +
                            std::to_string(years_[t]) + " has wrong shape");
    }
    if (!v.allFinite()) {
      throw ValidationError("non-finite export value in year " +
                            std::to_string(years_[t]));
    }
    if ((v.array() < 0.0).any()) {
      throw ValidationError("negative export value in year " +
                            std::to_string(years_[t]));
    }
  }
  country_lookup_ = index_codes(countries_, "country");
  product_lookup_ = index_codes(products_, "product");
}

bool ExportPanel::has_year(int year) const {
  return year >= years_.front() && year <= years_.back();
}

const Matrix& ExportPanel::values(int year) const {
  if (!has_year(year)) {
    throw LookupError("year " + std::to_string(year) + " not in panel [" +
                      std::to_string(first_year()) + ", " +
                      std::to_string(last_year()) + "]");
  }
  return values_[static_cast<std::size_t>(year - years_.front())];
}

std::size_t ExportPanel::country_index(const std::string& code) const {
  auto it = country_lookup_.find(code);
  if (it == country_lookup_.end()) {
    throw LookupError("unknown country '" + code + "'");
  }
  return it->second;
}

std::size_t ExportPanel::product_index(const std::string& code) const {
  auto it = product_lookup_.find(code);
  if (it == product_lookup_.end()) {
    throw LookupError("unknown product '" + code + "'");
  }
  return it->second;
}

RcaMatrix compute_rca(const ExportPanel& panel, int year) {
  const Matrix& v = panel.values(year);
  if (v.sum() <= 0.0) {
    throw ValidationError("all export values are zero in year " +
                          std::to_string(year));
  }
  return {year, balassa_rca(v)};
}

PresenceMatrix binarize(const RcaMatrix& rca, double threshold) {
  if (!(threshold > 0.0)) {
    throw ValidationError("binarization threshold must be positive");
  }
  return {rca.year, at_least(rca.values, threshold)};
}

ActivationMask activation_candidates(const ExportPanel& panel, int first_year,
                                     int last_year,
                                     double inactivity_threshold) {
  if (first_year > last_year) {
    throw ValidationError("empty activation window [" +
                          std::to_string(first_year) + ", " +
                          std::to_string(last_year) + "]");
  }
  ActivationMask mask;
  mask.first_year = first_year;
  mask.last_year = last_year;
  mask.inactivity_threshold = inactivity_threshold;
  mask.values = BinaryMatrix::Ones(static_cast<Eigen::Index>(panel.num_countries()),
                                   static_cast<Eigen::Index>(panel.num_products()));
  for (int y = first_year; y <= last_year; ++y) {
    const Matrix r = compute_rca(panel, y).values;
    mask.values.array() *=
        (r.array() < inactivity_threshold).cast<std::uint8_t>();
  }
  return mask;
}

ExportPanel aggregate_products(const ExportPanel& panel, int digits) {
  if (digits < 1) throw ValidationError("digits must be >= 1");
  const auto width = static_cast<std::size_t>(digits);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < panel.num_products(); ++p) {
    const std::string& code = panel.products()[p];
    if (code.size() < width) {
      throw ValidationError("product code '" + code + "' is shorter than " +
                            std::to_string(digits) + " digits");
    }
    groups[code.substr(0, width)].push_back(p);
  }
  std::vector<std::string> codes;
  codes.reserve(groups.size());
  for (const auto& [prefix, members] : groups) codes.push_back(prefix);

  std::vector<Matrix> values;
  values.reserve(panel.years().size());
  for (int year : panel.years()) {
    const Matrix& v = panel.values(year);
    Matrix out = Matrix::Zero(v.rows(), static_cast<Eigen::Index>(codes.size()));
    Eigen::Index g = 0;
    for (const auto& [prefix, members] : groups) {
      for (std::size_t p : members) out.col(g) += v.col(static_cast<Eigen::Index>(p));
      ++g;
    }
    values.push_back(std::move(out));
  }
  return ExportPanel(panel.years(), panel.countries(), std::move(codes),
                     std::move(values));
}

TransitionMatrix transition_probabilities(const PresenceMatrix& start,
                                          const PresenceMatrix& end) {
  if (start.values.rows() != end.values.rows() ||
      start.values.cols() != end.values.cols()) {
    throw ValidationError("presence matrices have different axes");
  }
  std::array<std::array<std::size_t, 2>, 2> counts{};
  for (Eigen::Index c = 0; c < start.values.rows(); ++c) {
    for (Eigen::Index p = 0; p < start.values.cols(); ++p) {
      ++counts[start.values(c, p) ? 1 : 0][end.values(c, p) ? 1 : 0];
    }
  }
  return transitions_from_counts(counts);
}

TransitionMatrix transitions_from_counts(
    const std::array<std::array<std::size_t, 2>, 2>& counts) {
  TransitionMatrix t;
  t.counts = counts;
  for (int a = 0; a < 2; ++a) {
    t.support[a] = counts[a][0] + counts[a][1];
    if (t.support[a] == 0) continue;
    const auto n = static_cast<double>(t.support[a]);
    t.probability[a][0] = static_cast<double>(counts[a][0]) / n;
    t.probability[a][1] = static_cast<double>(counts[a][1]) / n;
  }
  return t;
}

double density(const PresenceMatrix& m) {
  if (m.values.size() == 0) throw ValidationError("empty presence matrix");
  return m.values.cast<double>().sum() / static_cast<double>(m.values.size());
}

}  // namespace exportcast
