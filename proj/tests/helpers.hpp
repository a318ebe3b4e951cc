#pragma once

#include <random>
#include <string>
#include <vector>

#include "exportcast/trade_data.hpp"

namespace testing_helpers {

using exportcast::ExportPanel;
using exportcast::Matrix;

inline ExportPanel random_panel(std::mt19937_64& rng, int nc, int np, int years,
                                double zero_prob = 0.3, int first_year = 2000) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> c, p;
  for (int i = 0; i < nc; ++i) c.push_back("c" + std::to_string(i));
  for (int j = 0; j < np; ++j) p.push_back("p" + std::to_string(j));
  std::vector<int> ys;
  std::vector<Matrix> vals;
  for (int y = 0; y < years; ++y) {
    ys.push_back(first_year + y);
    Matrix v(nc, np);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < np; ++j) v(i, j) = u(rng) < zero_prob ? 0.0 : std::exp(3 * u(rng));
    v(0, 0) += 1.0;
    vals.push_back(v);
  }
  return ExportPanel(ys, c, p, vals);
}

// Scalar re-evaluation of the Balassa ratio.
inline double rca_cell(const Matrix& v, int c, int p) {
  double row = 0, col = 0, all = 0;
  for (int j = 0; j < v.cols(); ++j) row += v(c, j);
  for (int i = 0; i < v.rows(); ++i) col += v(i, p);
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) all += v(i, j);
  if (row == 0 || col == 0 || all == 0) return 0;
  return (v(c, p) / row) / (col / all);
}

}  // namespace testing_helpers
