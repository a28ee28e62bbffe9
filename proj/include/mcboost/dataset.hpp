#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcboost {

// Tabular sample: continuous block, dense-coded categorical block, outcome,
// and optional weight / initial-prediction / truth columns. Immutable after
// construction by convention; all matrices are row-major.
struct Dataset {
  std::vector<std::string> cont_names;
  std::vector<std::string> cat_names;
  std::vector<double> x_cont;                    // n x d_cont
  std::vector<std::int32_t> x_cat;               // n x d_cat, codes 0..K-1
  std::vector<std::vector<double>> cat_levels;   // per column: code -> original value
  std::vector<double> y;
  std::vector<double> weight;  // empty or size n
  std::vector<double> init;    // empty or size n: initial predictions passthrough
  std::vector<double> truth;   // empty or size n: oracle predictor f*

  std::size_t n() const { return y.size(); }
  std::size_t d_cont() const { return cont_names.size(); }
  std::size_t d_cat() const { return cat_names.size(); }

  double cont(std::size_t i, std::size_t j) const { return x_cont[i * d_cont() + j]; }
  std::int32_t cat(std::size_t i, std::size_t j) const { return x_cat[i * d_cat() + j]; }
  std::int32_t cat_cardinality(std::size_t j) const {
    return static_cast<std::int32_t>(cat_levels[j].size());
  }

  Dataset subset(std::span<const std::int32_t> rows) const;
};

enum class ColumnRole { Continuous, Categorical, Outcome, Weight, Init, Truth };

struct SchemaEntry {
  ColumnRole role;
  std::string column;
};

// Parses "cont:x1,cont:x2,cat:x6,y:y[,weight:w][,init:q0][,truth:f_star]".
std::vector<SchemaEntry> parse_schema(const std::string& text);

// Reads a header CSV, keeping only the columns named in the schema.
// Categorical columns are re-indexed to dense codes with the level values
// recorded in column order.
Dataset load_csv(const std::string& path, const std::vector<SchemaEntry>& schema);

// Writes all columns (17 significant digits, exact float round-trip);
// categorical cells are written as their original level values.
void write_csv(const std::string& path, const Dataset& data);
std::string to_csv(const Dataset& data);

struct SplitSpec {
  double calib_fraction = 0.5;
  double valid_fraction = 0.25;
  bool share_calib_valid = false;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset calib;
  Dataset valid;    // aliases calib's rows when share_calib_valid
  Dataset holdout;  // may be empty
  std::vector<std::int32_t> calib_rows;
  std::vector<std::int32_t> valid_rows;
  std::vector<std::int32_t> holdout_rows;
};

// Deterministic split: rows are ordered by a seed-keyed content hash, so the
// assignment is invariant to the input row order (same multiset per split).
SplitResult split(const Dataset& data, const SplitSpec& spec);

}  // namespace mcboost
