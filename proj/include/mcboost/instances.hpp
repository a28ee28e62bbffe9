#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcboost/boost.hpp"
#include "mcboost/dataset.hpp"
#include "mcboost/partitions.hpp"
#include "mcboost/trace.hpp"

namespace mcboost {

// One-shot group-conditional quantile correction. For each nonempty group G
// the shift beta_G is the lower-sample tau-quantile of the residuals
// y - q0 inside G, which minimizes the group-separable pinball objective
// exactly; predictions become q0 + beta_G on G. Empty groups are untouched.
CalibratedModel batch_gcp(const Dataset& data, std::span<const double> initial_quantiles,
                          double tau, const GroupSpec& groups);

struct MvpConfig {
  double tau = 0.5;
  std::int32_t grid = 20;  // resolution L of the 1/L prediction grid
  GroupSpec groups;
  double alpha = 0.02;
  std::int32_t max_iters = 1000;
  double step_multiplier = 1.0;
};

struct MvpResult {
  CalibratedModel model;
  BoostTrace trace;
  std::vector<double> final_q;  // in-loop predictions; replaying the model reproduces them
};

// Iterative grid-snapped quantile calibration. Predictions live on the
// {0, 1/L, ..., 1} grid; each round picks the (group, grid value) cell with
// the largest mass-weighted squared coverage gap and shifts it by the grid
// step delta whose literal (unclipped) coverage lands closest to tau, ties
// to smaller |delta| then negative. Stops when the worst cell's normalized
// violation is within alpha, when delta = 0 wins (stalled), or at max_iters.
// Outcomes are assumed pre-scaled so the [0,1] grid is meaningful.
MvpResult multi_mvp(const Dataset& data, std::span<const double> initial_quantiles,
                    const MvpConfig& config);

}  // namespace mcboost
