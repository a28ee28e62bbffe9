#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mcboost/boost.hpp"
#include "mcboost/common.hpp"
#include "mcboost/instances.hpp"
#include "mcboost/rng.hpp"
#include "mcboost/simgen.hpp"

using namespace mcboost;
using testutil::make_data;

namespace {

double mean_loss(const ScoreKind& kind, const std::vector<double>& y,
                 const std::vector<double>& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += loss(kind, y[i], f[i]);
  return sum / static_cast<double>(y.size());
}

// Four-group dataset with a per-group offset between y and the flat initial
// predictions; the per-group mean-corrected predictor is the closed form the
// constant-auditor loop must land on.
struct GroupedInstance {
  Dataset data;
  std::vector<double> f0;
  std::vector<double> oracle;  // f0 + per-group mean residual
};

GroupedInstance grouped_instance(std::uint64_t seed, std::size_t n) {
  Rng r(seed);
  std::vector<std::int32_t> g(n);
  std::vector<double> y(n), f0(n, 0.0);
  const double offset[4] = {0.8, -0.4, 0.2, -0.9};
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = static_cast<std::int32_t>(r.next_below(4));
    y[i] = offset[g[i]] + 0.3 * r.next_normal();
  }
  GroupedInstance inst;
  inst.data = make_data({}, {g}, y);
  inst.f0 = f0;
  double sum[4] = {0, 0, 0, 0};
  std::size_t cnt[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    sum[g[i]] += y[i] - f0[i];
    ++cnt[g[i]];
  }
  inst.oracle.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    inst.oracle[i] = f0[i] + sum[g[i]] / static_cast<double>(cnt[g[i]]);
  return inst;
}

BoostConfig group_mean_config() {
  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = AuditorKind::constant();
  cfg.groups.cat_columns = {0};
  cfg.buckets.count = 1;
  cfg.alpha = 1e-9;
  cfg.step = StepRule::adaptive_rule(0.5);
  cfg.max_iters = 50;
  return cfg;
}

}  // namespace

TEST_SUITE("boost") {

TEST_CASE("violation computes raw and normalized forms") {
  {
    auto [raw, norm] = violation(std::vector<double>{1.0, 1.0}, std::vector<double>{0.5, 0.5});
    CHECK(raw == 0.5);
    CHECK(norm == 0.5);
  }
  {
    auto [raw, norm] = violation(std::vector<double>{0.0, 0.0}, std::vector<double>{3.0, -1.0});
    CHECK(raw == 0.0);
    CHECK(norm == 0.0);
  }
  {
    // Doubling h doubles the raw value but the normalization cancels it.
    auto [raw, norm] = violation(std::vector<double>{2.0, 2.0}, std::vector<double>{0.5, 0.5});
    CHECK(raw == 1.0);
    CHECK(norm == 0.5);
  }
  CHECK_THROWS_AS((void)violation(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                  DataError);
}

TEST_CASE("normalized violation is invariant to direction scale") {
  Rng r(21);
  std::vector<double> h(40), s(40);
  for (int i = 0; i < 40; ++i) {
    h[i] = r.next_normal();
    s[i] = r.next_normal();
  }
  const double base = violation(h, s).second;
  for (double c : {-3.0, -0.5, 0.25, 10.0, 1e-6}) {
    std::vector<double> hc(40);
    for (int i = 0; i < 40; ++i) hc[i] = c * h[i];
    CHECK(violation(hc, s).second == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("unit weights reproduce the unweighted violation bit-exactly") {
  Rng r(22);
  std::vector<double> h(30), s(30);
  for (int i = 0; i < 30; ++i) {
    h[i] = r.next_normal();
    s[i] = r.next_normal();
  }
  const auto plain = violation(h, s);
  const auto weighted = weighted_violation(h, s, std::vector<double>(30, 1.0));
  CHECK(plain.first == weighted.first);
  CHECK(plain.second == weighted.second);
}

TEST_CASE("adaptive step follows the smoothness closed form") {
  CHECK(adaptive_step(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0}, 0.5) == 1.0);
  CHECK(adaptive_step(std::vector<double>{1.0, -1.0}, std::vector<double>{1.0, 1.0}, 0.5) == 0.0);
  CHECK_THROWS_AS(
      (void)adaptive_step(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}, 0.5),
      DataError);

  // Indicator direction + residual scores: the step is the cell's mean
  // residual when c_L = 1/2 (squared loss).
  Rng r(5);
  std::vector<double> h(60, 0.0), s(60);
  double cell_sum = 0.0;
  int cell_n = 0;
  for (int i = 0; i < 60; ++i) {
    s[i] = r.next_normal();
    if (i % 3 == 0) {
      h[i] = 1.0;
      cell_sum += s[i];
      ++cell_n;
    }
  }
  CHECK(adaptive_step(h, s, 0.5) ==
        doctest::Approx(cell_sum / cell_n).epsilon(1e-14));
}

TEST_CASE("apply_update steps then clips") {
  std::vector<double> f = {0.5};
  apply_update(f, 1.0, std::vector<double>{0.2}, std::nullopt);
  CHECK(f[0] == doctest::Approx(0.3).epsilon(1e-15));

  f = {0.1};
  apply_update(f, 1.0, std::vector<double>{0.5}, Projection{0.0, 1.0});
  CHECK(f[0] == 0.0);

  f = {0.7};
  apply_update(f, 0.0, std::vector<double>{123.0}, Projection{0.0, 1.0});
  CHECK(f[0] == 0.7);
}

TEST_CASE("audit_round fits per-cell constants and breaks ties low") {
  // Two groups, two rows each, mirrored scores: both cells tie on raw
  // violation, so the lower cell must be selected.
  std::vector<std::int32_t> g = {0, 0, 1, 1};
  std::vector<double> y = {0, 0, 0, 0};
  const Dataset d = make_data({}, {g}, y);
  const std::vector<double> s = {0.4, 0.4, -0.4, -0.4};
  const std::vector<double> anchor(4, 0.5);
  const std::vector<std::int32_t> gid = {0, 0, 1, 1};

  BoostConfig cfg = group_mean_config();
  const RoundAudit audit = audit_round(d, s, gid, anchor, d, s, gid, anchor, 2, cfg);
  REQUIRE(audit.candidates.size() == 2);
  CHECK(audit.candidates[0].cell == CellKey{0, 0});
  CHECK(audit.candidates[1].cell == CellKey{1, 0});
  // Constant fit = mean score in the cell; local mask zeroes the other rows.
  CHECK(audit.candidates[0].direction.constant == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(audit.candidates[1].direction.constant == doctest::Approx(-0.4).epsilon(1e-15));
  // raw = |0.4 * 0.4 * 2| / 4 per cell; normalized = raw / sqrt(0.16 * 2 / 4).
  CHECK(audit.candidates[0].raw == doctest::Approx(0.08).epsilon(1e-14));
  CHECK(audit.candidates[0].delta ==
        doctest::Approx(0.08 / std::sqrt(0.08)).epsilon(1e-14));
  CHECK(audit.candidates[1].raw == doctest::Approx(0.08).epsilon(1e-14));
  CHECK(audit.selected == 0);
  CHECK(audit.max_delta == doctest::Approx(audit.candidates[0].delta).epsilon(1e-14));
}

TEST_CASE("alpha above the initial violation means zero updates") {
  GroupedInstance inst = grouped_instance(31, 200);
  BoostConfig cfg = group_mean_config();
  cfg.alpha = 100.0;
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  const BoostResult res = run(bd, cfg);
  CHECK(res.trace.records.empty());
  CHECK(res.model.updates.empty());
  CHECK(res.model.terminated_by == "alpha");
  for (std::size_t i = 0; i < inst.f0.size(); ++i) CHECK(res.final_calib[i] == inst.f0[i]);
}

TEST_CASE("constant auditor reaches per-group means within |G| rounds") {
  GroupedInstance inst = grouped_instance(32, 400);
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  const BoostResult res = run(bd, group_mean_config());
  CHECK(res.trace.records.size() <= 4);
  CHECK(res.model.terminated_by == "alpha");
  for (std::size_t i = 0; i < inst.f0.size(); ++i)
    CHECK(res.final_calib[i] == doctest::Approx(inst.oracle[i]).epsilon(1e-12));
  // Each adaptive step on a disjoint cell zeroes that cell exactly, so the
  // calibration loss never increases along the way.
  double prev = res.trace.initial_calib_loss;
  for (const TraceRecord& rec : res.trace.records) {
    CHECK(rec.calib_loss <= prev + 1e-12);
    prev = rec.calib_loss;
  }
}

TEST_CASE("fixed steps descend on the benchmark generator") {
  SimConfig sc;
  sc.n = 2000;
  sc.seed = 7;
  const Dataset d = generate(sc);
  std::vector<double> f0(d.n(), 0.0);

  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = AuditorKind::tree(3, 5);
  cfg.buckets.count = 1;
  cfg.alpha = 1e-9;
  cfg.step = StepRule::fixed(0.1);
  cfg.max_iters = 50;

  BoostData bd;
  bd.calib = &d;
  bd.valid = &d;
  bd.f0_calib = f0;
  bd.f0_valid = f0;
  const BoostResult res = run(bd, cfg);
  REQUIRE(res.trace.records.size() >= 50);
  double prev = res.trace.initial_calib_loss;
  for (const TraceRecord& rec : res.trace.records) {
    CHECK(rec.calib_loss <= prev + 1e-12);
    prev = rec.calib_loss;
  }
}

TEST_CASE("alpha termination survives a re-audit of the returned model") {
  SimConfig sc;
  sc.n = 1200;
  sc.seed = 9;
  const Dataset d = generate(sc);
  const std::vector<double> f0 = predict(fit_ols(d), d);

  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = AuditorKind::constant();
  cfg.groups.cat_columns = {0, 1};
  cfg.buckets.count = 4;
  cfg.alpha = 0.05;
  cfg.step = StepRule::adaptive_rule(0.5);
  cfg.max_iters = 500;

  BoostData bd;
  bd.calib = &d;
  bd.valid = &d;
  bd.f0_calib = f0;
  bd.f0_valid = f0;
  const BoostResult res = run(bd, cfg);
  REQUIRE(res.model.terminated_by == "alpha");

  const std::vector<std::int32_t> gid = assign_groups(cfg.groups, d);
  std::vector<double> s(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) s[i] = score(cfg.score, d.y[i], res.final_calib[i]);
  const RoundAudit audit =
      audit_round(d, s, gid, f0, d, s, gid, f0, group_count(cfg.groups, d), cfg);
  CHECK(audit.max_delta <= cfg.alpha);
  CHECK(res.trace.final_max_delta == doctest::Approx(audit.max_delta).epsilon(1e-12));
}

TEST_CASE("budget rule stops at the cumulative-step allowance") {
  GroupedInstance inst = grouped_instance(33, 256);
  BoostConfig cfg = group_mean_config();
  cfg.step = StepRule::fixed(0.05);
  cfg.alpha = 1e-12;
  cfg.max_iters = 1000;
  cfg.stopping = StoppingRule::budget(0.25);
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  const BoostResult res = run(bd, cfg);
  REQUIRE(res.model.terminated_by == "budget");
  const double allowance = std::pow(256.0, 0.25);  // = 4
  REQUIRE(!res.trace.records.empty());
  CHECK(res.trace.records.back().cum_budget >= allowance);
  for (std::size_t i = 0; i + 1 < res.trace.records.size(); ++i)
    CHECK(res.trace.records[i].cum_budget < allowance);
}

TEST_CASE("patience rolls back to the best monitored iterate") {
  SimConfig sc;
  sc.n = 600;
  sc.seed = 41;
  const Dataset calib = generate(sc);
  sc.n = 80;
  sc.seed = 42;
  const Dataset valid = generate(sc);

  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = AuditorKind::tree(3, 5);
  cfg.groups.cat_columns = {0, 1};
  cfg.buckets.count = 2;
  cfg.alpha = 1e-12;
  cfg.step = StepRule::adaptive_rule(0.5);
  cfg.max_iters = 100;
  cfg.stopping = StoppingRule::patience_rule(3, 0.02);

  BoostData bd;
  bd.calib = &calib;
  bd.valid = &valid;
  bd.f0_calib.assign(calib.n(), 0.0);
  bd.f0_valid.assign(valid.n(), 0.0);
  const BoostResult res = run(bd, cfg);
  REQUIRE(res.model.terminated_by == "patience");

  // Roll-back target is the executed iterate with the lowest valid loss,
  // the untouched initial model counting as iterate 0.
  std::int32_t best = 0;
  double best_loss = res.trace.initial_valid_loss;
  for (const TraceRecord& rec : res.trace.records) {
    if (rec.valid_loss < best_loss) {
      best_loss = rec.valid_loss;
      best = rec.iter;
    }
  }
  CHECK(res.trace.rollback_iter == best);
  CHECK(res.model.updates.size() == static_cast<std::size_t>(best));

  // The returned predictions are the rolled-back state, and replay agrees.
  const std::vector<double> replay = predict(res.model, calib, bd.f0_calib);
  for (std::size_t i = 0; i < calib.n(); ++i) CHECK(replay[i] == res.final_calib[i]);
  CHECK(mean_loss(cfg.score, valid.y, res.final_valid) == doctest::Approx(best_loss).epsilon(1e-12));
}

TEST_CASE("trace csv starts at iteration zero with the documented columns") {
  GroupedInstance inst = grouped_instance(34, 128);
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  const BoostResult res = run(bd, group_mean_config());
  const std::string csv = trace_to_csv(res.trace);
  CHECK(csv.rfind("iter,cell_g,cell_l,raw_violation,delta,eta,cum_budget,calib_loss,valid_loss,"
                  "holdout_loss\n",
                  0) == 0);
  const std::size_t first_row = csv.find('\n') + 1;
  CHECK(csv.compare(first_row, 5, "0,-1,") == 0);
  const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == res.trace.records.size() + 2);
}

TEST_CASE("replay reproduces in-loop predictions bit for bit") {
  SimConfig sc;
  sc.n = 900;
  sc.seed = 51;
  const Dataset calib = generate(sc);
  sc.n = 300;
  sc.seed = 52;
  const Dataset holdout = generate(sc);

  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = AuditorKind::tree(2, 5);
  cfg.groups.cat_columns = {0, 1};
  cfg.buckets.count = 4;
  cfg.buckets.anchor = BucketAnchor::Dynamic;
  cfg.alpha = 0.02;
  cfg.step = StepRule::adaptive_rule(0.5);
  cfg.max_iters = 40;
  cfg.projection = Projection{-2.0, 2.0};

  const InitialModel init = fit_ols(calib);
  BoostData bd;
  bd.calib = &calib;
  bd.valid = &calib;
  bd.holdout = &holdout;
  bd.f0_calib = predict(init, calib);
  bd.f0_valid = bd.f0_calib;
  bd.f0_holdout = predict(init, holdout);
  const BoostResult res = run(bd, cfg);
  REQUIRE(!res.model.updates.empty());

  const std::vector<double> on_calib = predict(res.model, calib, bd.f0_calib);
  for (std::size_t i = 0; i < calib.n(); ++i) CHECK(on_calib[i] == res.final_calib[i]);
  const std::vector<double> on_holdout = predict(res.model, holdout, bd.f0_holdout);
  for (std::size_t i = 0; i < holdout.n(); ++i) CHECK(on_holdout[i] == res.final_holdout[i]);
}

TEST_CASE("zero updates leave the initial predictions untouched") {
  GroupedInstance inst = grouped_instance(35, 64);
  CalibratedModel model;
  model.score = ScoreKind::squared();
  const std::vector<double> out = predict(model, inst.data, inst.f0);
  for (std::size_t i = 0; i < inst.f0.size(); ++i) CHECK(out[i] == inst.f0[i]);
}

TEST_CASE("a single constant update shifts exactly its cell") {
  std::vector<std::int32_t> g = {0, 1, 0, 1};
  const Dataset d = make_data({}, {g}, {0, 0, 0, 0});

  CalibratedModel model;
  model.score = ScoreKind::squared();
  model.group_columns = {d.cat_names[0]};
  UpdateRecord u;
  u.eta = 1.0;
  u.direction.type = AuditorType::Constant;
  u.direction.constant = 0.2;
  u.group_id = 1;
  u.bucket_id = 0;
  u.local = true;
  u.buckets = ResolvedBuckets{1, 0.0, 1.0, false};
  model.updates.push_back(u);

  const std::vector<double> out = predict(model, d, std::vector<double>{0.5, 0.5, 0.5, 0.5});
  CHECK(out[0] == 0.5);
  CHECK(out[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(out[2] == 0.5);
  CHECK(out[3] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("global scope applies the selected direction everywhere") {
  GroupedInstance inst = grouped_instance(36, 200);
  BoostConfig cfg = group_mean_config();
  cfg.local_scope = false;
  cfg.max_iters = 1;
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  const BoostResult res = run(bd, cfg);
  REQUIRE(res.trace.records.size() == 1);
  const double shift = res.trace.records[0].eta * res.model.updates[0].direction.constant;
  for (std::size_t i = 0; i < inst.f0.size(); ++i)
    CHECK(res.final_calib[i] == doctest::Approx(inst.f0[i] - shift).epsilon(1e-15));
}

TEST_CASE("snap grid keeps every iterate on the grid") {
  GroupedInstance inst = grouped_instance(37, 300);
  for (double& v : inst.data.y) v = 0.5 + 0.2 * v;  // keep targets near [0,1]
  BoostConfig cfg = group_mean_config();
  cfg.alpha = 1e-3;
  cfg.snap_grid = 10;
  cfg.projection = Projection{0.0, 1.0};
  std::vector<double> f0(inst.data.n(), 0.5);
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = f0;
  bd.f0_valid = f0;
  const BoostResult res = run(bd, cfg);
  for (double v : res.final_calib) CHECK(v == snap_to_grid(v, 10));
}

TEST_CASE("projection keeps iterates inside the interval") {
  GroupedInstance inst = grouped_instance(38, 300);
  BoostConfig cfg = group_mean_config();
  cfg.projection = Projection{0.0, 0.25};
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  const BoostResult res = run(bd, cfg);
  for (double v : res.final_calib) {
    CHECK(v >= 0.0);
    CHECK(v <= 0.25);
  }
}

TEST_CASE("unresolved cross-validation rule is rejected by run") {
  GroupedInstance inst = grouped_instance(39, 64);
  BoostConfig cfg = group_mean_config();
  cfg.stopping = StoppingRule::cross_val(3);
  BoostData bd;
  bd.calib = &inst.data;
  bd.valid = &inst.data;
  bd.f0_calib = inst.f0;
  bd.f0_valid = inst.f0;
  CHECK_THROWS_AS((void)run(bd, cfg), ConfigError);
}

TEST_CASE("cv_select with a single grid point returns it") {
  GroupedInstance inst = grouped_instance(40, 120);
  BoostConfig cfg = group_mean_config();
  CHECK(cv_select(inst.data, inst.f0, cfg, 3, {1.0}) == 1.0);
}

TEST_CASE("cv_select picks the largest budget when held loss keeps falling") {
  // Flat initial predictions one unit below the targets: every fixed step of
  // 0.05 removes 0.05 of offset, so held-fold loss falls monotonically
  // through the whole grid and the maximum budget wins.
  Rng r(61);
  const std::size_t n = 300;
  std::vector<std::int32_t> g(n, 0);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 0.1 * r.next_normal();
  Dataset d = make_data({}, {g}, y);
  std::vector<double> f0(n, 0.0);

  BoostConfig cfg = group_mean_config();
  cfg.step = StepRule::fixed(0.05);
  cfg.alpha = 1e-12;
  cfg.max_iters = 100;
  const double chosen = cv_select(d, f0, cfg, 3, {0.25, 0.5, 1.0});
  CHECK(chosen == 1.0);
  // Deterministic given identical inputs.
  CHECK(cv_select(d, f0, cfg, 3, {0.25, 0.5, 1.0}) == chosen);
}

TEST_CASE("auto budget grid spans 0.1 to twice the fourth root") {
  const std::vector<double> grid = auto_budget_grid(4096);
  REQUIRE(grid.size() == 12);
  CHECK(grid.front() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(16.0).epsilon(1e-12));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("saved models reload with identical predictions") {
  SimConfig sc;
  sc.n = 500;
  sc.seed = 71;
  const Dataset calib = generate(sc);
  sc.n = 200;
  sc.seed = 72;
  const Dataset fresh = generate(sc);

  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = AuditorKind::tree(2, 5);
  cfg.groups.cat_columns = {0};
  cfg.buckets.count = 3;
  cfg.buckets.anchor = BucketAnchor::Dynamic;
  cfg.alpha = 0.05;
  cfg.step = StepRule::adaptive_rule(0.5);
  cfg.max_iters = 25;

  BoostData bd;
  bd.calib = &calib;
  bd.valid = &calib;
  bd.f0_calib.assign(calib.n(), 0.0);
  bd.f0_valid.assign(calib.n(), 0.0);
  const BoostResult res = run(bd, cfg);
  REQUIRE(!res.model.updates.empty());

  const std::string path = "test_boost_model_roundtrip.json";
  save_calibrated_model(path, res.model);
  const CalibratedModel back = load_calibrated_model(path);
  std::remove(path.c_str());

  const std::vector<double> f0(fresh.n(), 0.0);
  const std::vector<double> a = predict(res.model, fresh, f0);
  const std::vector<double> b = predict(back, fresh, f0);
  for (std::size_t i = 0; i < fresh.n(); ++i) CHECK(a[i] == b[i]);
}

}  // TEST_SUITE
