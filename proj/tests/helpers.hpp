#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcboost/dataset.hpp"

namespace testutil {

// Builds a dataset from column vectors. Categorical columns must already be
// dense codes; levels default to the identity mapping 0..max.
inline mcboost::Dataset make_data(const std::vector<std::vector<double>>& cont_cols,
                                  const std::vector<std::vector<std::int32_t>>& cat_cols,
                                  const std::vector<double>& y) {
  mcboost::Dataset d;
  const std::size_t n = y.size();
  d.y = y;
  for (std::size_t j = 0; j < cont_cols.size(); ++j)
    d.cont_names.push_back("x" + std::to_string(j + 1));
  for (std::size_t j = 0; j < cat_cols.size(); ++j)
    d.cat_names.push_back("c" + std::to_string(j + 1));
  d.x_cont.resize(n * cont_cols.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cont_cols.size(); ++j) d.x_cont[i * cont_cols.size() + j] = cont_cols[j][i];
  d.x_cat.resize(n * cat_cols.size());
  std::int32_t dummy = 0;
  (void)dummy;
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    std::int32_t mx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d.x_cat[i * cat_cols.size() + j] = cat_cols[j][i];
      if (cat_cols[j][i] > mx) mx = cat_cols[j][i];
    }
    std::vector<double> levels;
    for (std::int32_t c = 0; c <= mx; ++c) levels.push_back(static_cast<double>(c));
    d.cat_levels.push_back(std::move(levels));
  }
  return d;
}

inline std::vector<std::int32_t> iota_rows(std::size_t n) {
  std::vector<std::int32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::int32_t>(i);
  return rows;
}

}  // namespace testutil
