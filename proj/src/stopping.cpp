#include "mcboost/stopping.hpp"

#include <cmath>
#include <cstdio>

#include "mcboost/common.hpp"

namespace mcboost {

StoppingRule StoppingRule::alpha_only() { return StoppingRule{}; }

StoppingRule StoppingRule::budget(double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ConfigError("budget exponent must lie in (0,1)");
  StoppingRule r;
  r.kind = StopKind::Budget;
  r.rho = rho;
  return r;
}

StoppingRule StoppingRule::budget_abs(double value) {
  StoppingRule r;
  r.kind = StopKind::BudgetAbs;
  r.abs_budget = value;
  return r;
}

StoppingRule StoppingRule::cross_val(std::int32_t k, std::vector<double> grid) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  StoppingRule r;
  r.kind = StopKind::CrossVal;
  r.k_folds = k;
  r.grid = std::move(grid);
  return r;
}

StoppingRule StoppingRule::patience_rule(std::int32_t p, double min_delta) {
  if (p < 1) throw ConfigError("patience must be a positive iteration count");
  if (min_delta < 0.0) throw ConfigError("patience min_delta must be nonnegative");
  StoppingRule r;
  r.kind = StopKind::Patience;
  r.patience = p;
  r.min_delta = min_delta;
  return r;
}

StopDecision should_stop(const StoppingRule& rule, const BoostTrace& trace,
                         std::size_t n_calib) {
  StopDecision d;
  switch (rule.kind) {
    case StopKind::AlphaOnly:
      return d;
    case StopKind::CrossVal:
      throw ConfigError("cross-validation must be resolved to a budget before running");
    case StopKind::Budget:
    case StopKind::BudgetAbs: {
      if (trace.records.empty()) return d;
      const double allowance = rule.kind == StopKind::Budget
                                   ? std::pow(static_cast<double>(n_calib), rule.rho)
                                   : rule.abs_budget;
      if (trace.records.back().cum_budget >= allowance) {
        d.stop = true;
        d.reason = "budget";
      }
      return d;
    }
    case StopKind::Patience: {
      if (trace.records.empty()) return d;
      const bool use_holdout =
          rule.monitor_holdout && !std::isnan(trace.initial_holdout_loss);
      const double init = use_holdout ? trace.initial_holdout_loss : trace.initial_valid_loss;
      // The streak resets only on min_delta-sized improvements, but the
      // roll-back target is the literal loss minimum among executed iterates.
      double best = init, lowest = init;
      std::int32_t best_iter = 0;
      std::int32_t streak = 0;
      for (const TraceRecord& rec : trace.records) {
        const double m = use_holdout ? rec.holdout_loss : rec.valid_loss;
        if (m < lowest) {
          lowest = m;
          best_iter = rec.iter;
        }
        if (m < best - rule.min_delta) {
          best = m;
          streak = 0;
        } else {
          streak += 1;
        }
        if (streak >= rule.patience) {
          d.stop = true;
          d.rollback = best_iter;
          d.reason = "patience";
          return d;
        }
      }
      return d;
    }
  }
  return d;
}

StoppingRule parse_stopping_rule(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "alpha" && arg.empty()) return StoppingRule::alpha_only();
    if (head == "budget") return StoppingRule::budget(std::stod(arg));
    if (head == "budget-abs") return StoppingRule::budget_abs(std::stod(arg));
    if (head == "cv") return StoppingRule::cross_val(std::stoi(arg));
    if (head == "patience") return StoppingRule::patience_rule(std::stoi(arg));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad stopping rule argument in '" + text + "'");
  }
  throw ConfigError("unknown stopping rule '" + text +
                    "' (expected alpha|budget:RHO|cv:K|patience:P)");
}

std::string stopping_rule_name(const StoppingRule& rule) {
  char buf[64];
  switch (rule.kind) {
    case StopKind::AlphaOnly:
      return "alpha";
    case StopKind::Budget:
      std::snprintf(buf, sizeof buf, "budget:%g", rule.rho);
      return buf;
    case StopKind::BudgetAbs:
      std::snprintf(buf, sizeof buf, "budget-abs:%g", rule.abs_budget);
      return buf;
    case StopKind::CrossVal:
      std::snprintf(buf, sizeof buf, "cv:%d", rule.k_folds);
      return buf;
    case StopKind::Patience:
      std::snprintf(buf, sizeof buf, "patience:%d", rule.patience);
      return buf;
  }
  return "?";
}

}  // namespace mcboost
