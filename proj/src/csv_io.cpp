#include "exportcast/csv_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

namespace exportcast {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::size_t find_column(const std::vector<std::string_view>& header,
                        const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

ExportPanel read_export_csv(std::istream& in, const ColumnMapping& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
    line.erase(0, 3);  // UTF-8 BOM
  }
  const std::string header_line = line;
  const auto header = split_fields(header_line);
  const std::size_t year_col = find_column(header, schema.year);
  const std::size_t country_col = find_column(header, schema.country);
  const std::size_t product_col = find_column(header, schema.product);
  const std::size_t value_col = find_column(header, schema.value);
  const std::size_t needed =
      std::max({year_col, country_col, product_col, value_col}) + 1;

  std::map<std::tuple<int, std::string, std::string>, double> cells;
  std::set<int> years;
  std::set<std::string> countries;
  std::set<std::string> products;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < needed) {
      throw ParseError(line_no, "expected at least " + std::to_string(needed) +
                                    " fields, found " +
                                    std::to_string(fields.size()));
    }
    int year = 0;
    if (!parse_number(fields[year_col], year)) {
      throw ParseError(line_no, "invalid year '" + std::string(fields[year_col]) + "'");
    }
    double value = 0.0;
    if (!parse_number(fields[value_col], value) || !std::isfinite(value)) {
      throw ParseError(line_no,
                       "invalid value '" + std::string(fields[value_col]) + "'");
    }
    if (value < 0.0) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": negative export value");
    }
    std::string country(fields[country_col]);
    std::string product(fields[product_col]);
    if (country.empty() || product.empty()) {
      throw ParseError(line_no, "empty country or product code");
    }
    years.insert(year);
    countries.insert(country);
    products.insert(product);
    cells[{year, std::move(country), std::move(product)}] += value;
  }
  if (cells.empty()) throw ParseError(line_no, "no data rows");

  std::vector<int> year_list(years.begin(), years.end());
  std::vector<std::string> country_list(countries.begin(), countries.end());
  std::vector<std::string> product_list(products.begin(), products.end());
  if (year_list.back() - year_list.front() + 1 !=
      static_cast<int>(year_list.size())) {
    for (std::size_t i = 1; i < year_list.size(); ++i) {
      if (year_list[i] != year_list[i - 1] + 1) {
        throw ValidationError("year gap at " + std::to_string(year_list[i - 1] + 1));
      }
    }
  }
  std::map<std::string, Eigen::Index> country_pos;
  std::map<std::string, Eigen::Index> product_pos;
  for (std::size_t i = 0; i < country_list.size(); ++i) {
    country_pos[country_list[i]] = static_cast<Eigen::Index>(i);
  }
  for (std::size_t i = 0; i < product_list.size(); ++i) {
    product_pos[product_list[i]] = static_cast<Eigen::Index>(i);
  }
  std::vector<Matrix> values(
      year_list.size(),
      Matrix::Zero(static_cast<Eigen::Index>(country_list.size()),
                   static_cast<Eigen::Index>(product_list.size())));
  for (const auto& [key, value] : cells) {
    const auto& [year, country, product] = key;
    const auto t = static_cast<std::size_t>(year - year_list.front());
    values[t](country_pos[country], product_pos[product]) = value;
  }
  return ExportPanel(std::move(year_list), std::move(country_list),
                     std::move(product_list), std::move(values));
}

ExportPanel load_export_csv(const std::filesystem::path& path,
                            const ColumnMapping& schema) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open '" + path.string() + "'");
  return read_export_csv(in, schema);
}

void write_export_csv(std::ostream& out, const ExportPanel& panel) {
  out << "year,country,product,value\n";
  for (int year : panel.years()) {
    const Matrix& v = panel.values(year);
    for (std::size_t c = 0; c < panel.num_countries(); ++c) {
      for (std::size_t p = 0; p < panel.num_products(); ++p) {
        out << year << ',' << panel.countries()[c] << ',' << panel.products()[p]
            << ',' << format_double(v(static_cast<Eigen::Index>(c),
                                      static_cast<Eigen::Index>(p)))
            << '\n';
      }
    }
  }
}

}  // namespace exportcast
