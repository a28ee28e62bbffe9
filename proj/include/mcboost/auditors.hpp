#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcboost/cart.hpp"
#include "mcboost/dataset.hpp"

namespace mcboost {

enum class AuditorType { Constant, Linear, Tree };

struct AuditorKind {
  AuditorType type = AuditorType::Constant;
  double ridge_lambda = 1e-6;     // Linear
  std::int32_t max_depth = 3;     // Tree
  std::int32_t min_leaf = 5;      // Tree
  bool include_categorical = true;

  static AuditorKind constant();
  static AuditorKind linear(double ridge_lambda = 1e-6, bool include_categorical = true);
  static AuditorKind tree(std::int32_t max_depth = 3, std::int32_t min_leaf = 5,
                          bool include_categorical = true);
};

// One additive term of a linear direction: coef * x_cont[index], or
// coef * 1{x_cat[index] == level} for a one-hot categorical column.
struct LinearTerm {
  bool categorical = false;
  std::int32_t index = 0;
  std::int32_t level = 0;
  double coef = 0.0;
};

// A fitted direction h, evaluable on any schema-compatible dataset. When
// cell_mask is nonempty (local updates) evaluation zeroes non-members; the
// mask is in-memory only, serialized models re-derive membership from the
// recorded cell identity instead.
struct Direction {
  AuditorType type = AuditorType::Constant;
  double constant = 0.0;           // Constant
  double intercept = 0.0;          // Linear
  std::vector<LinearTerm> terms;   // Linear
  std::vector<TreeNode> nodes;     // Tree
  std::size_t d_cont = 0;          // schema guard for tree/linear evaluation
  std::vector<std::uint8_t> cell_mask;
  double l2_norm_sq_on_valid = -1.0;  // cache owned by the boosting loop
};

// Mean of scores over the given rows. Empty rows -> DataError (empty cell;
// callers skip such cells before fitting).
Direction fit_constant(std::span<const double> scores, std::span<const std::int32_t> rows);

// Ridge regression of scores on the covariates over the given rows:
// minimizes sum (s - a - x'b)^2 + lambda*|b|^2 with the intercept
// unpenalized; normal equations solved by Cholesky, falling back to
// lambda' = max(lambda, 1e-8 * trace) (escalating tenfold) on rank
// deficiency. Categorical columns enter as one-hot levels 1..K-1.
Direction fit_linear(const Dataset& data, std::span<const double> scores,
                     std::span<const std::int32_t> rows, double ridge_lambda,
                     bool include_categorical = true);

// Greedy CART regression of scores on the covariates over the given rows.
Direction fit_tree(const Dataset& data, std::span<const double> scores,
                   std::span<const std::int32_t> rows, const AuditorKind& kind);

Direction fit_direction(const Dataset& data, std::span<const double> scores,
                        std::span<const std::int32_t> rows, const AuditorKind& kind);

// h(x) per row; exact 0.0 where cell_mask excludes a row.
std::vector<double> evaluate(const Direction& dir, const Dataset& data);

// h(x) at one row, ignoring any cell mask. No schema checks: callers
// validate once per dataset (evaluate does) before row-wise use.
double direction_value(const Direction& dir, const Dataset& data, std::size_t row);

void to_json(nlohmann::json& j, const Direction& dir);
void from_json(const nlohmann::json& j, Direction& dir);
void to_json(nlohmann::json& j, const AuditorKind& kind);
void from_json(const nlohmann::json& j, AuditorKind& kind);

// CLI notation: "constant", "linear", "tree".
AuditorKind parse_auditor_kind(const std::string& text);

}  // namespace mcboost
