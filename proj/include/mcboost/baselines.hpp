#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcboost/auditors.hpp"
#include "mcboost/cart.hpp"
#include "mcboost/dataset.hpp"

namespace mcboost {

enum class InitialType { OLS, Forest, QuantileForest };

struct ForestParams {
  std::int32_t n_trees = 100;
  std::int32_t max_depth = 8;
  std::int32_t min_leaf = 5;
  std::int32_t mtry = -1;  // -1 = ceil(d/3); 0 = all features
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// Self-contained initial predictor f0. Forest trees are plain CART on
// bootstrap resamples; the quantile variant keeps sorted outcome samples in
// every leaf and predicts the pooled lower-sample quantile across trees.
struct InitialModel {
  InitialType type = InitialType::OLS;
  bool include_categorical = true;
  std::vector<std::string> cont_names, cat_names;  // training schema guard

  // OLS
  double intercept = 0.0;
  std::vector<LinearTerm> terms;
  bool ridge_fallback = false;  // set when the design needed regularizing

  // Forest / QuantileForest
  ForestParams params;
  std::vector<std::vector<TreeNode>> trees;
  std::vector<std::vector<std::vector<double>>> leaf_samples;  // per tree, per node
  double tau = 0.5;      // QuantileForest level
  double oob_mse = -1.0; // -1 when not computed (no bootstrap)
};

// Least squares of y on the covariates (one-hot categoricals, intercept);
// residuals come out orthogonal to every design column. A singular design
// falls back to ridge with lambda = 1e-8 * trace and sets ridge_fallback.
InitialModel fit_ols(const Dataset& data, bool include_categorical = true);

InitialModel fit_forest(const Dataset& data, const ForestParams& params,
                        bool include_categorical = true);

InitialModel fit_quantile_forest(const Dataset& data, double tau, const ForestParams& params,
                                 bool include_categorical = true);

std::vector<double> predict(const InitialModel& model, const Dataset& data);

void to_json(nlohmann::json& j, const InitialModel& model);
void from_json(const nlohmann::json& j, InitialModel& model);

void save_initial_model(const std::string& path, const InitialModel& model);
InitialModel load_initial_model(const std::string& path);

}  // namespace mcboost
