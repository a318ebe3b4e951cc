#pragma once

#include <charconv>
#include <filesystem>
#include <iosfwd>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "exportcast/trade_data.hpp"

namespace exportcast {

// Header names of the four required columns. Extra columns are ignored.
struct ColumnMapping {
  std::string year = "year";
  std::string country = "country";
  std::string product = "product";
  std::string value = "value";
};

// Reads long-format trade rows. Missing (year, country, product) keys are
// zero-filled and duplicate keys are summed. Country and product axes are
// sorted by code.
ExportPanel read_export_csv(std::istream& in, const ColumnMapping& schema = {});
ExportPanel load_export_csv(const std::filesystem::path& path,
                            const ColumnMapping& schema = {});

// Writes every cell of the panel in the long format read above.
void write_export_csv(std::ostream& out, const ExportPanel& panel);

// Shortest text that parses back to the same double.
std::string format_double(double value);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

// Countries as rows, products as columns; the first row and column hold
// labels.
template <typename Derived>
void write_labeled_matrix(std::ostream& out, std::string_view corner,
                          const std::vector<std::string>& row_labels,
                          const std::vector<std::string>& col_labels,
                          const Eigen::MatrixBase<Derived>& m) {
  out << corner;
  for (const auto& label : col_labels) out << ',' << label;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << row_labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ',' << format_double(static_cast<double>(m(r, c)));
    }
    out << '\n';
  }
}

}  // namespace exportcast
