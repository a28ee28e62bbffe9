#include <cmath>
#include <vector>

#include "doctest.h"
#include "mcboost/common.hpp"
#include "mcboost/stopping.hpp"

using namespace mcboost;

namespace {

// Trace with the given cumulative budgets and valid losses, one record per
// entry; only the fields should_stop reads are populated.
BoostTrace make_trace(std::vector<double> cum, std::vector<double> valid_loss,
                      double initial_valid = 1e9) {
  BoostTrace t;
  t.initial_valid_loss = initial_valid;
  t.initial_holdout_loss = NAN;
  for (std::size_t i = 0; i < cum.size(); ++i) {
    TraceRecord r;
    r.iter = static_cast<std::int32_t>(i + 1);
    r.cum_budget = cum[i];
    r.valid_loss = i < valid_loss.size() ? valid_loss[i] : 0.0;
    t.records.push_back(r);
  }
  return t;
}

}  // namespace

TEST_SUITE("stopping") {

TEST_CASE("cli notation parses and round-trips") {
  CHECK(parse_stopping_rule("alpha").kind == StopKind::AlphaOnly);
  const StoppingRule b = parse_stopping_rule("budget:0.25");
  CHECK(b.kind == StopKind::Budget);
  CHECK(b.rho == 0.25);
  const StoppingRule c = parse_stopping_rule("cv:3");
  CHECK(c.kind == StopKind::CrossVal);
  CHECK(c.k_folds == 3);
  const StoppingRule p = parse_stopping_rule("patience:5");
  CHECK(p.kind == StopKind::Patience);
  CHECK(p.patience == 5);
  for (const StoppingRule& rule : {StoppingRule::alpha_only(), StoppingRule::budget(0.25),
                                   StoppingRule::cross_val(4), StoppingRule::patience_rule(7)})
    CHECK(parse_stopping_rule(stopping_rule_name(rule)).kind == rule.kind);
  CHECK_THROWS_AS((void)parse_stopping_rule("never"), ConfigError);
  CHECK_THROWS_AS((void)parse_stopping_rule("budget:1.5"), ConfigError);
  CHECK_THROWS_AS((void)parse_stopping_rule("cv:1"), ConfigError);
  CHECK_THROWS_AS((void)parse_stopping_rule("patience:0"), ConfigError);
}

TEST_CASE("budget rule fires at the n^rho allowance") {
  // 4096^(1/4) = 8, so a cumulative spend of 8.1 stops and 7.9 does not.
  const StoppingRule rule = StoppingRule::budget(0.25);
  CHECK(should_stop(rule, make_trace({8.1}, {}), 4096).stop);
  CHECK(should_stop(rule, make_trace({8.0}, {}), 4096).stop);
  CHECK(!should_stop(rule, make_trace({7.9}, {}), 4096).stop);
  CHECK(should_stop(rule, make_trace({8.1}, {}), 4096).reason == "budget");
}

TEST_CASE("budget rule is monotone in rho") {
  // A larger exponent grants a larger allowance, so it never stops earlier.
  const std::size_t n = 2187;
  for (double cum : {0.5, 1.0, 3.0, 6.0, 6.9, 7.0, 9.0, 50.0}) {
    const BoostTrace t = make_trace({cum}, {});
    bool prev_stopped = true;
    for (double rho : {0.1, 0.2, 0.25, 1.0 / 3.0, 0.5}) {
      const bool stops = should_stop(StoppingRule::budget(rho), t, n).stop;
      CHECK((prev_stopped || !stops));
      prev_stopped = stops;
    }
  }
}

TEST_CASE("absolute budget rule uses the configured allowance") {
  const StoppingRule rule = StoppingRule::budget_abs(2.5);
  CHECK(!should_stop(rule, make_trace({2.49}, {}), 10).stop);
  CHECK(should_stop(rule, make_trace({2.5}, {}), 10).stop);
}

TEST_CASE("patience stops after p flat iterations and rolls back to the best") {
  const StoppingRule rule = StoppingRule::patience_rule(3);
  // Losses 1.0, 0.9, 0.91, 0.92, 0.93: the best is iterate 2; iterates 3-5
  // are three consecutive non-improvements, so the rule fires after 5.
  const std::vector<double> losses = {1.0, 0.9, 0.91, 0.92, 0.93};
  for (std::size_t upto = 1; upto <= 5; ++upto) {
    std::vector<double> cut(losses.begin(), losses.begin() + upto);
    const BoostTrace t = make_trace(std::vector<double>(upto, 0.0), cut, 2.0);
    const StopDecision dec = should_stop(rule, t, 100);
    if (upto < 5) {
      CHECK(!dec.stop);
    } else {
      CHECK(dec.stop);
      CHECK(dec.rollback == 2);
      CHECK(dec.reason == "patience");
    }
  }
}

TEST_CASE("patience counts the initial model as the opening best") {
  // Nothing ever improves on the initial loss, so the rule fires after p
  // iterations and rolls all the way back.
  const StoppingRule rule = StoppingRule::patience_rule(2);
  const BoostTrace t = make_trace({0, 0}, {1.5, 1.6}, 1.0);
  const StopDecision dec = should_stop(rule, t, 100);
  CHECK(dec.stop);
  CHECK(dec.rollback == 0);
}

TEST_CASE("patience min_delta discounts sub-threshold improvements") {
  StoppingRule rule = StoppingRule::patience_rule(2, 0.05);
  // 0.98 improves on 1.0 by only 0.02 < min_delta, so it does not reset the
  // counter; two such iterations fire the rule.
  const BoostTrace t = make_trace({0, 0}, {0.98, 0.97}, 1.0);
  const StopDecision dec = should_stop(rule, t, 100);
  CHECK(dec.stop);
  // Roll-back still targets the genuinely smallest monitored loss.
  CHECK(dec.rollback == 2);
}

TEST_CASE("alpha-only never fires from the rule side") {
  const StoppingRule rule = StoppingRule::alpha_only();
  CHECK(!should_stop(rule, make_trace({1e9}, {1e-9}), 4).stop);
  CHECK(!should_stop(rule, make_trace({0.0}, {0.0}), 4).stop);
}

}  // TEST_SUITE
