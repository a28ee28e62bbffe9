#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcboost/dataset.hpp"
#include "mcboost/metrics.hpp"
#include "mcboost/partitions.hpp"

namespace mcboost {

enum class ShiftType {
  InteractionReg,   // tails of Z1*Z2, 0.20 total mass
  InteractionNeg,   // bottom 0.20 of Z1*Z2
  HardRegion,       // 0.5|Z1| + 0.3 Z2^2 + 0.2|Z1 Z2| beyond its 0.85 quantile
  CurvatureTilt,    // w ~ exp(0.4 Z2^2)
  HardMixedTilt,    // w ~ exp(0.30|Z1| + 0.25 Z2^2 + 0.25 Z1 Z2 + 0.25 X6 + 0.25 X7)
  LocalBump,        // Gaussian bump at (1.2, -1.0), bandwidth 0.8
  GroupIndicator,   // 1{group} / empirical mass
  Custom,           // expression over z1, z2, x6, x7, treated as a tilt
};

struct ShiftSpec {
  ShiftType type = ShiftType::CurvatureTilt;
  bool one_sided = false;  // InteractionReg: upper 0.20 tail instead of 0.10 + 0.10
  double clip_lo = 0.1;
  double clip_hi = 10.0;
  bool normalize_mean_one = true;
  GroupSpec groups;           // GroupIndicator subgrouping
  std::int32_t group_id = 0;  // GroupIndicator target
  std::string expression;     // Custom formula
  std::int32_t z1_col = 0;    // continuous column standardized into Z1
  std::int32_t z2_col = 1;
  std::int32_t x6_col = 0;  // categorical columns entering mixed tilts at raw level values
  std::int32_t x7_col = 1;
};

// (x - mean_ref)/sd_ref per column, sd with the n-1 denominator.
// Zero reference variance is an error naming the offending column.
std::vector<double> standardize_column(const Dataset& data, const Dataset& reference,
                                       std::int32_t col);
std::vector<std::vector<double>> standardize(const Dataset& data, const Dataset& reference,
                                             std::span<const std::int32_t> cols);

// Weights before clipping/normalization: indicators for subgroup variants,
// positive tilts otherwise. Subgroup thresholds come from lower-sample
// quantiles on the standardized reference.
std::vector<double> raw_shift_weights(const Dataset& data, const ShiftSpec& spec,
                                      const Dataset& reference);

// Final evaluation weights: tilt variants clip into [clip_lo, clip_hi] and
// rescale to empirical mean 1; subgroup variants divide the indicator by its
// empirical mass (an empty subgroup is a degenerate shift error).
std::vector<double> make_weights(const Dataset& data, const ShiftSpec& spec,
                                 const Dataset& reference);

std::vector<double> clip_weights(std::vector<double> w, double lo, double hi);

// Minimal arithmetic over per-row bindings z1, z2, x6, x7 with + - * / ^,
// abs(...), exp(...) and parentheses.
double eval_shift_expression(const std::string& expression, double z1, double z2, double x6,
                             double x7);

EvalReport weighted_eval(std::span<const double> y, std::span<const double> f,
                         std::span<const double> weights,
                         std::span<const std::int32_t> group_ids, std::int32_t n_groups,
                         const EvalOptions& opt, std::span<const double> f_star = {});

ShiftType parse_shift_type(const std::string& name);
std::string shift_type_name(ShiftType type);

}  // namespace mcboost
