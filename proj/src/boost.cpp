#include "mcboost/boost.hpp"

#include <algorithm>
#include <cmath>

#include "mcboost/common.hpp"
#include "mcboost/rng.hpp"

namespace mcboost {

StepRule StepRule::adaptive_rule(double c_L) {
  StepRule s;
  s.adaptive = true;
  s.c_L = c_L;
  return s;
}

StepRule StepRule::fixed(double eta) {
  StepRule s;
  s.adaptive = false;
  s.eta = eta;
  return s;
}

std::pair<double, double> weighted_violation(std::span<const double> h,
                                             std::span<const double> s,
                                             std::span<const double> w) {
  if (h.size() != s.size()) throw DataError("violation: direction/score length mismatch");
  if (!w.empty() && w.size() != h.size())
    throw DataError("violation: weight length mismatch");
  if (h.empty()) throw DataError("violation: empty sample");
  double num = 0.0, hh = 0.0, den = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    num += wi * (h[i] * s[i]);
    hh += wi * (h[i] * h[i]);
    den += wi;
  }
  if (!(hh > 0.0)) return {0.0, 0.0};
  const double raw = std::fabs(num) / den;
  return {raw, raw / std::sqrt(hh / den)};
}

std::pair<double, double> violation(std::span<const double> h, std::span<const double> s) {
  return weighted_violation(h, s, {});
}

double adaptive_step(std::span<const double> h, std::span<const double> s, double c_L) {
  if (h.size() != s.size()) throw DataError("adaptive step: length mismatch");
  if (!(c_L > 0.0)) throw ConfigError("smoothness constant must be positive");
  double hs = 0.0, hh = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    hs += h[i] * s[i];
    hh += h[i] * h[i];
  }
  const auto n = static_cast<double>(h.size());
  if (!(hh > 0.0)) throw DataError("adaptive step: direction has zero norm");
  return (hs / n) / (2.0 * c_L * (hh / n));
}

void apply_update(std::vector<double>& f, double eta, std::span<const double> h,
                  const std::optional<Projection>& projection) {
  if (f.size() != h.size()) throw DataError("update: length mismatch");
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v = f[i] - eta * h[i];
    if (projection) {
      if (v < projection->lo) v = projection->lo;
      if (v > projection->hi) v = projection->hi;
    }
    f[i] = v;
  }
}

namespace {

double mean_loss(const ScoreKind& kind, std::span<const double> y, std::span<const double> f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += loss(kind, y[i], f[i]);
  return sum / static_cast<double>(y.size());
}

void recompute_scores(const ScoreKind& kind, std::span<const double> y,
                      std::span<const double> f, std::vector<double>& s) {
  s.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = score(kind, y[i], f[i]);
}

void snap_all(std::vector<double>& f, std::int32_t grid) {
  if (grid <= 0) return;
  for (double& v : f) v = snap_to_grid(v, grid);
}

bool cell_member(const UpdateRecord& u, std::int32_t gid, double anchor) {
  if (!u.local) return true;
  if (gid != u.group_id) return false;
  return u.buckets.directional ? directional_member(anchor, u.buckets, u.bucket_id)
                               : bucket_of(anchor, u.buckets) == u.bucket_id;
}

void validate_config(const BoostConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (cfg.max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (cfg.step.adaptive && !(cfg.step.c_L > 0.0))
    throw ConfigError("smoothness constant must be positive");
  if (!cfg.step.adaptive && !(cfg.step.eta > 0.0))
    throw ConfigError("fixed step size must be positive");
  if (cfg.projection && !(cfg.projection->lo < cfg.projection->hi))
    throw ConfigError("projection interval must have lo < hi");
  if (cfg.buckets.count < 1) throw ConfigError("bucket count must be at least 1");
  if (!cfg.buckets.auto_range && !(cfg.buckets.lo < cfg.buckets.hi))
    throw ConfigError("bucket range must have lo < hi");
  if (cfg.snap_grid < 0) throw ConfigError("snap grid must be nonnegative");
}

}  // namespace

void replay_update(const UpdateRecord& u, const Dataset& data,
                   std::span<const std::int32_t> gid, std::span<const double> anchor,
                   const std::optional<Projection>& projection, std::int32_t snap_grid,
                   std::vector<double>& f) {
  const std::size_t n = data.n();
  std::vector<std::uint8_t> member(n, 1);
  if (u.local)
    for (std::size_t i = 0; i < n; ++i)
      member[i] = cell_member(u, gid[i], anchor[i]) ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = member[i] ? direction_value(u.direction, data, i) : 0.0;
    double v = f[i] - u.eta * h;
    if (projection) {
      if (v < projection->lo) v = projection->lo;
      if (v > projection->hi) v = projection->hi;
    }
    if (snap_grid > 0) v = snap_to_grid(v, snap_grid);
    f[i] = v;
  }
}

RoundAudit audit_round(const Dataset& calib, std::span<const double> s_calib,
                       std::span<const std::int32_t> gid_calib,
                       std::span<const double> anchor_calib, const Dataset& valid,
                       std::span<const double> s_valid, std::span<const std::int32_t> gid_valid,
                       std::span<const double> anchor_valid, std::int32_t n_groups,
                       const BoostConfig& cfg) {
  RoundAudit out;
  std::vector<double> joint;
  joint.reserve(anchor_calib.size() + anchor_valid.size());
  joint.insert(joint.end(), anchor_calib.begin(), anchor_calib.end());
  joint.insert(joint.end(), anchor_valid.begin(), anchor_valid.end());
  out.buckets = resolve_buckets(cfg.buckets, joint);

  const auto cells = enumerate_cells(gid_calib, n_groups, anchor_calib, out.buckets);
  const auto n_v = static_cast<double>(valid.n());
  double best_raw = 0.0;

  for (const auto& [key, rows] : cells) {
    RoundCandidate cand;
    cand.cell = key;
    cand.direction = fit_direction(calib, s_calib, rows, cfg.auditor);

    if (cfg.local_scope) {
      for (std::int32_t r : rows) {
        const auto i = static_cast<std::size_t>(r);
        const double v = direction_value(cand.direction, calib, i);
        cand.hs_calib += v * s_calib[i];
        cand.hh_calib += v * v;
      }
    } else {
      for (std::size_t i = 0; i < calib.n(); ++i) {
        const double v = direction_value(cand.direction, calib, i);
        cand.hs_calib += v * s_calib[i];
        cand.hh_calib += v * v;
      }
    }

    double num = 0.0, hh = 0.0;
    for (std::size_t i = 0; i < valid.n(); ++i) {
      if (cfg.local_scope) {
        if (gid_valid[i] != key.group) continue;
        const bool in_bucket = out.buckets.directional
                                   ? directional_member(anchor_valid[i], out.buckets, key.bucket)
                                   : bucket_of(anchor_valid[i], out.buckets) == key.bucket;
        if (!in_bucket) continue;
      }
      const double v = direction_value(cand.direction, valid, i);
      num += v * s_valid[i];
      hh += v * v;
    }
    if (hh > 0.0) {
      cand.raw = std::fabs(num) / n_v;
      cand.delta = cand.raw / std::sqrt(hh / n_v);
    }

    out.max_delta = std::max(out.max_delta, cand.delta);
    if (cand.hh_calib > 0.0 && cand.raw > best_raw) {
      best_raw = cand.raw;
      out.selected = static_cast<std::int32_t>(out.candidates.size());
    }
    out.candidates.push_back(std::move(cand));
  }
  return out;
}

BoostResult run(const BoostData& data, const BoostConfig& cfg) {
  validate_config(cfg);
  if (cfg.stopping.kind == StopKind::CrossVal)
    throw ConfigError("cross-validation must be resolved to a budget before running");
  if (!data.calib || !data.valid) throw ConfigError("calibration and validation sets required");
  const Dataset& calib = *data.calib;
  const Dataset& valid = *data.valid;
  if (calib.n() == 0 || valid.n() == 0)
    throw DataError("calibration and validation sets must be nonempty");
  if (data.f0_calib.size() != calib.n() || data.f0_valid.size() != valid.n())
    throw DataError("initial predictions do not match split sizes");
  const bool has_holdout = data.holdout != nullptr && data.holdout->n() > 0;
  if (has_holdout && data.f0_holdout.size() != data.holdout->n())
    throw DataError("initial predictions do not match split sizes");
  validate_labels(cfg.score, calib.y);
  validate_labels(cfg.score, valid.y);
  if (has_holdout) validate_labels(cfg.score, data.holdout->y);

  const std::int32_t n_groups = group_count(cfg.groups, calib);
  const auto gid_c = assign_groups(cfg.groups, calib);
  const auto gid_v = assign_groups(cfg.groups, valid);
  const auto gid_h =
      has_holdout ? assign_groups(cfg.groups, *data.holdout) : std::vector<std::int32_t>{};

  BoostResult res;
  res.final_calib = data.f0_calib;
  res.final_valid = data.f0_valid;
  res.final_holdout = data.f0_holdout;
  snap_all(res.final_calib, cfg.snap_grid);
  snap_all(res.final_valid, cfg.snap_grid);
  snap_all(res.final_holdout, cfg.snap_grid);

  // Iterate-0 state anchors Static bucketing throughout.
  const std::vector<double> anchor0_c = res.final_calib;
  const std::vector<double> anchor0_v = res.final_valid;
  const std::vector<double> anchor0_h = res.final_holdout;
  const bool is_static = cfg.buckets.anchor == BucketAnchor::Static;

  std::vector<double> s_c, s_v;
  recompute_scores(cfg.score, calib.y, res.final_calib, s_c);
  recompute_scores(cfg.score, valid.y, res.final_valid, s_v);

  BoostTrace& trace = res.trace;
  trace.initial_calib_loss = mean_loss(cfg.score, calib.y, res.final_calib);
  trace.initial_valid_loss = mean_loss(cfg.score, valid.y, res.final_valid);
  trace.initial_holdout_loss =
      has_holdout ? mean_loss(cfg.score, data.holdout->y, res.final_holdout) : NAN;

  CalibratedModel& model = res.model;
  model.score = cfg.score;
  model.group_columns = group_column_names(cfg.groups, calib);
  model.anchor = cfg.buckets.anchor;
  model.projection = cfg.projection;
  model.snap_grid = cfg.snap_grid;

  // Patience roll-back state: iterate 0 opens as the best.
  const bool track_best = cfg.stopping.kind == StopKind::Patience;
  const bool monitor_holdout = cfg.stopping.monitor_holdout && has_holdout;
  double best_monitored =
      monitor_holdout ? trace.initial_holdout_loss : trace.initial_valid_loss;
  std::vector<double> best_f_c, best_f_v, best_f_h;
  std::size_t best_updates = 0;
  if (track_best) {
    best_f_c = res.final_calib;
    best_f_v = res.final_valid;
    best_f_h = res.final_holdout;
  }

  double cum = 0.0;
  std::string terminated;

  for (std::int32_t b = 1; b <= cfg.max_iters; ++b) {
    const RoundAudit audit =
        audit_round(calib, s_c, gid_c, is_static ? anchor0_c : res.final_calib, valid, s_v,
                    gid_v, is_static ? anchor0_v : res.final_valid, n_groups, cfg);
    trace.final_max_delta = audit.max_delta;
    if (audit.candidates.empty() || audit.max_delta <= cfg.alpha) {
      terminated = "alpha";
      break;
    }
    if (audit.selected < 0) {
      terminated = "stalled";
      break;
    }
    const RoundCandidate& cand = audit.candidates[static_cast<std::size_t>(audit.selected)];

    double eta;
    if (cfg.step.adaptive) {
      const auto n_c = static_cast<double>(calib.n());
      eta = (cand.hs_calib / n_c) / (2.0 * cfg.step.c_L * (cand.hh_calib / n_c));
    } else {
      const double sign = cand.hs_calib > 0.0 ? 1.0 : (cand.hs_calib < 0.0 ? -1.0 : 0.0);
      eta = cfg.step.eta * sign;
    }

    UpdateRecord u;
    u.eta = eta;
    u.direction = cand.direction;
    u.direction.cell_mask.clear();
    u.direction.l2_norm_sq_on_valid = -1.0;
    u.group_id = cand.cell.group;
    u.bucket_id = cand.cell.bucket;
    u.local = cfg.local_scope;
    u.buckets = audit.buckets;

    replay_update(u, calib, gid_c, is_static ? anchor0_c : res.final_calib,
                          cfg.projection, cfg.snap_grid, res.final_calib);
    replay_update(u, valid, gid_v, is_static ? anchor0_v : res.final_valid,
                          cfg.projection, cfg.snap_grid, res.final_valid);
    if (has_holdout)
      replay_update(u, *data.holdout, gid_h, is_static ? anchor0_h : res.final_holdout,
                            cfg.projection, cfg.snap_grid, res.final_holdout);

    recompute_scores(cfg.score, calib.y, res.final_calib, s_c);
    recompute_scores(cfg.score, valid.y, res.final_valid, s_v);
    cum += std::fabs(eta);

    TraceRecord rec;
    rec.iter = b;
    rec.cell_g = cand.cell.group;
    rec.cell_l = cand.cell.bucket;
    rec.raw = cand.raw;
    rec.delta = cand.delta;
    rec.max_delta = audit.max_delta;
    rec.eta = eta;
    rec.cum_budget = cum;
    rec.calib_loss = mean_loss(cfg.score, calib.y, res.final_calib);
    rec.valid_loss = mean_loss(cfg.score, valid.y, res.final_valid);
    rec.holdout_loss =
        has_holdout ? mean_loss(cfg.score, data.holdout->y, res.final_holdout) : NAN;
    trace.records.push_back(rec);
    model.updates.push_back(std::move(u));

    if (track_best) {
      const double m = monitor_holdout ? rec.holdout_loss : rec.valid_loss;
      if (m < best_monitored) {
        best_monitored = m;
        best_updates = model.updates.size();
        best_f_c = res.final_calib;
        best_f_v = res.final_valid;
        best_f_h = res.final_holdout;
      }
    }

    const StopDecision dec = should_stop(cfg.stopping, trace, calib.n());
    if (dec.stop) {
      terminated = dec.reason;
      if (dec.rollback >= 0) {
        trace.rollback_iter = dec.rollback;
        if (static_cast<std::size_t>(dec.rollback) < model.updates.size()) {
          model.updates.resize(static_cast<std::size_t>(dec.rollback));
          // should_stop's best index and the tracked snapshot agree by
          // construction; restore the snapshot.
          (void)best_updates;
          res.final_calib = best_f_c;
          res.final_valid = best_f_v;
          res.final_holdout = best_f_h;
        }
      }
      break;
    }
  }

  if (terminated.empty()) terminated = "max_iters";
  model.terminated_by = terminated;
  trace.terminated_by = terminated;
  return res;
}

std::vector<std::int32_t> model_group_ids(const CalibratedModel& model, const Dataset& data) {
  GroupSpec spec;
  for (const std::string& name : model.group_columns) {
    const auto it = std::find(data.cat_names.begin(), data.cat_names.end(), name);
    if (it == data.cat_names.end())
      throw DataError("dataset lacks the model's group column '" + name + "'");
    spec.cat_columns.push_back(static_cast<std::int32_t>(it - data.cat_names.begin()));
  }
  return assign_groups(spec, data);
}

std::vector<double> predict(const CalibratedModel& model, const Dataset& data,
                            std::vector<double> initial) {
  if (initial.size() != data.n())
    throw DataError("initial predictions do not match the dataset size");
  std::vector<double> f = std::move(initial);
  snap_all(f, model.snap_grid);
  if (model.updates.empty()) return f;

  const auto gid = model_group_ids(model, data);
  const std::vector<double> anchor0 =
      model.anchor == BucketAnchor::Static ? f : std::vector<double>{};
  for (const UpdateRecord& u : model.updates)
    replay_update(u, data, gid, model.anchor == BucketAnchor::Static ? anchor0 : f,
                          model.projection, model.snap_grid, f);
  return f;
}

std::vector<double> initial_predictions(const CalibratedModel& model, const Dataset& data) {
  if (model.initial) return predict(*model.initial, data);
  if (!model.init_column.empty()) {
    if (data.init.size() != data.n())
      throw DataError("dataset lacks the initial-prediction column '" + model.init_column +
                      "'");
    return data.init;
  }
  throw DataError("model carries no initial predictor; supply initial predictions");
}

std::vector<double> auto_budget_grid(std::size_t n_pool) {
  const double lo = 0.1;
  const double hi = 2.0 * std::pow(static_cast<double>(n_pool), 0.25);
  const int points = 12;
  std::vector<double> grid(points);
  const double llo = std::log(lo), lhi = std::log(std::max(hi, lo * 1.000001));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (points - 1));
  return grid;
}

double cv_select(const Dataset& pool, std::span<const double> f0_pool, const BoostConfig& cfg,
                 std::int32_t k_folds, std::vector<double> grid) {
  if (k_folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (pool.n() < static_cast<std::size_t>(k_folds))
    throw ConfigError("fewer rows than folds");
  if (f0_pool.size() != pool.n())
    throw DataError("initial predictions do not match the pool size");
  if (grid.empty()) grid = auto_budget_grid(pool.n());
  if (grid.empty()) throw ConfigError("empty budget grid");
  std::sort(grid.begin(), grid.end());
  if (!(grid.front() > 0.0)) throw ConfigError("budgets must be positive");

  // Deterministic fold assignment by seeded shuffle.
  const std::size_t n = pool.n();
  std::vector<std::int32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::int32_t>(i);
  Rng rng = Rng(cfg.seed).split(0x5fc3u);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto j = i + rng.next_below(n - i);
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::int32_t> fold(n);
  for (std::size_t i = 0; i < n; ++i)
    fold[static_cast<std::size_t>(perm[i])] = static_cast<std::int32_t>(i % k_folds);

  std::vector<double> mean_loss_at(grid.size(), 0.0);
  for (std::int32_t j = 0; j < k_folds; ++j) {
    std::vector<std::int32_t> train_rows, held_rows;
    for (std::size_t i = 0; i < n; ++i)
      (fold[i] == j ? held_rows : train_rows).push_back(static_cast<std::int32_t>(i));
    if (train_rows.empty() || held_rows.empty())
      throw ConfigError("a fold came out empty; reduce k");

    const Dataset train = pool.subset(train_rows);
    const Dataset held = pool.subset(held_rows);
    std::vector<double> f0_train, f0_held;
    for (std::int32_t r : train_rows) f0_train.push_back(f0_pool[static_cast<std::size_t>(r)]);
    for (std::int32_t r : held_rows) f0_held.push_back(f0_pool[static_cast<std::size_t>(r)]);

    BoostConfig fold_cfg = cfg;
    fold_cfg.stopping = StoppingRule::budget_abs(grid.back());

    BoostData bd;
    bd.calib = &train;
    bd.valid = &train;
    bd.holdout = &held;
    bd.f0_calib = f0_train;
    bd.f0_valid = std::move(f0_train);
    bd.f0_holdout = std::move(f0_held);
    const BoostResult res = run(bd, fold_cfg);

    // Held loss at budget g: the first iterate whose cumulative spend
    // reaches g (matching how a budget-g run would stop), else the final one.
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      double held_loss = res.trace.initial_holdout_loss;
      for (const TraceRecord& rec : res.trace.records) {
        held_loss = rec.holdout_loss;
        if (rec.cum_budget >= grid[gi]) break;
      }
      mean_loss_at[gi] += held_loss / k_folds;
    }
  }

  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi)
    if (mean_loss_at[gi] < mean_loss_at[best]) best = gi;
  return grid[best];
}

void to_json(nlohmann::json& j, const CalibratedModel& model) {
  j = nlohmann::json::object();
  j["format_version"] = 1;
  j["type"] = "calibrated";
  nlohmann::json score_j;
  to_json(score_j, model.score);
  j["score"] = std::move(score_j);
  j["group_columns"] = model.group_columns;
  j["anchor"] = model.anchor == BucketAnchor::Static ? "static" : "dynamic";
  if (model.projection)
    j["projection"] = {{"lo", model.projection->lo}, {"hi", model.projection->hi}};
  else
    j["projection"] = nullptr;
  j["snap_grid"] = model.snap_grid;
  j["terminated_by"] = model.terminated_by;
  nlohmann::json updates = nlohmann::json::array();
  for (const UpdateRecord& u : model.updates) {
    nlohmann::json dir_j;
    to_json(dir_j, u.direction);
    updates.push_back({{"eta", u.eta},
                       {"group", u.group_id},
                       {"bucket", u.bucket_id},
                       {"local", u.local},
                       {"buckets",
                        {{"count", u.buckets.count},
                         {"lo", u.buckets.lo},
                         {"hi", u.buckets.hi},
                         {"directional", u.buckets.directional}}},
                       {"direction", std::move(dir_j)}});
  }
  j["updates"] = std::move(updates);
  if (model.initial) {
    nlohmann::json init_j;
    to_json(init_j, *model.initial);
    j["initial"] = std::move(init_j);
  } else {
    j["initial"] = nullptr;
  }
  j["init_column"] = model.init_column;
}

void from_json(const nlohmann::json& j, CalibratedModel& model) {
  model = CalibratedModel{};
  from_json(j.at("score"), model.score);
  model.group_columns = j.at("group_columns").get<std::vector<std::string>>();
  model.anchor =
      j.at("anchor").get<std::string>() == "static" ? BucketAnchor::Static : BucketAnchor::Dynamic;
  if (!j.at("projection").is_null())
    model.projection =
        Projection{j["projection"].at("lo").get<double>(), j["projection"].at("hi").get<double>()};
  model.snap_grid = j.at("snap_grid").get<std::int32_t>();
  model.terminated_by = j.value("terminated_by", std::string{});
  for (const auto& uj : j.at("updates")) {
    UpdateRecord u;
    u.eta = uj.at("eta").get<double>();
    u.group_id = uj.at("group").get<std::int32_t>();
    u.bucket_id = uj.at("bucket").get<std::int32_t>();
    u.local = uj.at("local").get<bool>();
    const auto& b = uj.at("buckets");
    u.buckets.count = b.at("count").get<std::int32_t>();
    u.buckets.lo = b.at("lo").get<double>();
    u.buckets.hi = b.at("hi").get<double>();
    u.buckets.directional = b.at("directional").get<bool>();
    from_json(uj.at("direction"), u.direction);
    model.updates.push_back(std::move(u));
  }
  if (j.contains("initial") && !j.at("initial").is_null()) {
    InitialModel init;
    from_json(j.at("initial"), init);
    model.initial = std::move(init);
  }
  model.init_column = j.value("init_column", std::string{});
}

void save_calibrated_model(const std::string& path, const CalibratedModel& model) {
  nlohmann::json j;
  to_json(j, model);
  write_file_atomic(path, j.dump(2) + "\n");
}

CalibratedModel load_calibrated_model(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  CalibratedModel model;
  from_json(j, model);
  return model;
}

}  // namespace mcboost
