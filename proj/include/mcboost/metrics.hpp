#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcboost/partitions.hpp"
#include "mcboost/scores.hpp"
#include "json.hpp"

namespace mcboost {

struct GroupStats {
  double bias = 0.0;      // mean(y - f) within the group
  double mse = 0.0;       // mean (y - f)^2 within the group
  double coverage = NAN;  // mean 1{y <= f}, reported for quantile scores
  std::size_t n = 0;
};

struct CellStats {
  double calibration_error = 0.0;  // mean(y - f) within the (group, bucket) cell
  std::size_t n = 0;
};

struct EvalReport {
  std::vector<std::pair<std::int32_t, GroupStats>> per_group;  // nonempty groups, ascending
  std::vector<std::pair<CellKey, CellStats>> per_cell;         // nonempty cells, ascending
  double mse = 0.0;
  double mean_loss = 0.0;
  double mean_abs_group_bias = 0.0;
  double excess_risk = NAN;       // set when truth predictions are supplied
  double sup_violation = NAN;     // set by callers that audit a direction family
  double coverage_overall = NAN;  // set for quantile scores
  std::size_t n = 0;
};

struct EvalOptions {
  ScoreKind score = ScoreKind::squared();
  BucketSpec buckets;                    // grid for per-cell calibration error
  bool weight_groups_by_size = false;    // mean_abs_group_bias aggregation
};

// Every mean below is the weighted mean sum(w*x)/sum(w); an empty weight
// vector means unit weights and produces bit-identical values.

std::vector<std::pair<std::int32_t, double>> groupwise_bias(
    std::span<const double> y, std::span<const double> f,
    std::span<const std::int32_t> group_ids, std::int32_t n_groups,
    std::span<const double> w = {});

double mean_abs_group_bias(std::span<const double> y, std::span<const double> f,
                           std::span<const std::int32_t> group_ids, std::int32_t n_groups,
                           std::span<const double> w = {}, bool weight_by_size = false);

// Buckets are resolved on the evaluated predictions themselves.
std::vector<std::pair<CellKey, CellStats>> cell_calibration_error(
    std::span<const double> y, std::span<const double> f,
    std::span<const std::int32_t> group_ids, std::int32_t n_groups, const BucketSpec& buckets,
    std::span<const double> w = {});

// Per-group empirical P(Y <= q) and its deviation from tau; ties covered.
std::vector<std::pair<std::int32_t, std::pair<double, double>>> coverage(
    std::span<const double> y, std::span<const double> q,
    std::span<const std::int32_t> group_ids, std::int32_t n_groups, double tau,
    std::span<const double> w = {});

// mean loss(f) - mean loss(f_star) under the given score's loss.
double excess_convex_risk(std::span<const double> y, std::span<const double> f,
                          std::span<const double> f_star, const ScoreKind& kind,
                          std::span<const double> w = {});

// Max normalized violation over a finite direction family; empty family -> 0.
double sup_violation(const std::vector<std::vector<double>>& family,
                     std::span<const double> s, std::span<const double> w = {});

EvalReport evaluate(std::span<const double> y, std::span<const double> f,
                    std::span<const std::int32_t> group_ids, std::int32_t n_groups,
                    const EvalOptions& opt, std::span<const double> w = {},
                    std::span<const double> f_star = {});

void to_json(nlohmann::json& j, const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

}  // namespace mcboost
