#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcboost/trace.hpp"

namespace mcboost {

// AlphaOnly relies entirely on the in-loop max-Delta <= alpha check. Budget
// spends a cumulative |eta| allowance of n_calib^rho; BudgetAbs is the same
// with an absolute allowance (what cross-validation resolves to). CrossVal
// must be resolved via cv_select before a run. Patience watches a monitored
// loss and rolls back to the best iterate.
enum class StopKind { AlphaOnly, Budget, BudgetAbs, CrossVal, Patience };

struct StoppingRule {
  StopKind kind = StopKind::AlphaOnly;
  double rho = 0.25;               // Budget
  double abs_budget = 0.0;         // BudgetAbs
  std::int32_t k_folds = 3;        // CrossVal
  std::vector<double> grid;        // CrossVal; empty = derive automatically
  std::int32_t patience = 5;       // Patience
  double min_delta = 0.0;          // Patience improvement threshold
  bool monitor_holdout = false;    // Patience monitors holdout instead of V

  static StoppingRule alpha_only();
  static StoppingRule budget(double rho);
  static StoppingRule budget_abs(double value);
  static StoppingRule cross_val(std::int32_t k, std::vector<double> grid = {});
  static StoppingRule patience_rule(std::int32_t p, double min_delta = 0.0);
};

struct StopDecision {
  bool stop = false;
  std::int32_t rollback = -1;  // >= 0: truncate the model to this iterate
  std::string reason;
};

// Consulted after each applied update, on the trace so far. Patience fires
// once the monitored loss has gone `patience` consecutive iterations without
// improving on the best by more than min_delta; the initial iterate counts
// as the opening best.
StopDecision should_stop(const StoppingRule& rule, const BoostTrace& trace,
                         std::size_t n_calib);

// CLI notation: "alpha", "budget:0.25", "cv:3", "patience:5".
StoppingRule parse_stopping_rule(const std::string& text);
std::string stopping_rule_name(const StoppingRule& rule);

}  // namespace mcboost
