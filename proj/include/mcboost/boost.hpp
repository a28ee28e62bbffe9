#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mcboost/auditors.hpp"
#include "mcboost/baselines.hpp"
#include "mcboost/dataset.hpp"
#include "mcboost/partitions.hpp"
#include "mcboost/scores.hpp"
#include "mcboost/stopping.hpp"
#include "mcboost/trace.hpp"

namespace mcboost {

struct StepRule {
  bool adaptive = true;
  double c_L = 0.5;  // smoothness constant; the step denominator uses 2*c_L
  double eta = 0.1;  // fixed magnitude; its sign follows the score correlation

  static StepRule adaptive_rule(double c_L = 0.5);
  static StepRule fixed(double eta);
};

struct Projection {
  double lo = 0.0;
  double hi = 1.0;
};

struct BoostConfig {
  ScoreKind score{};
  AuditorKind auditor{};
  GroupSpec groups{};
  BucketSpec buckets{};
  double alpha = 0.01;
  StepRule step{};
  std::int32_t max_iters = 1000;
  std::optional<Projection> projection;
  bool local_scope = true;  // mask each update by its selected cell
  StoppingRule stopping{};
  std::int32_t snap_grid = 0;  // >0: predictions snap to {0,...,L}/L after every update
  std::uint64_t seed = 0;
};

// One recorded boosting update. Membership of out-of-sample rows is
// re-derived from the stored cell identity and bucket boundaries, so replay
// is a pure function of the serialized model.
struct UpdateRecord {
  double eta = 0.0;
  Direction direction;
  std::int32_t group_id = 0;
  std::int32_t bucket_id = 0;
  bool local = true;
  ResolvedBuckets buckets;
};

struct CalibratedModel {
  ScoreKind score{};
  std::vector<std::string> group_columns;  // categorical column names
  BucketAnchor anchor = BucketAnchor::Static;
  std::optional<Projection> projection;
  std::int32_t snap_grid = 0;
  std::vector<UpdateRecord> updates;
  std::string terminated_by;  // alpha | budget | patience | max_iters | stalled | one_shot

  // f0 reference making a serialized model self-contained: an embedded
  // initial model, or the name of a dataset column carrying predictions.
  std::optional<InitialModel> initial;
  std::string init_column;
};

struct BoostData {
  const Dataset* calib = nullptr;
  const Dataset* valid = nullptr;    // may point at the calibration set
  const Dataset* holdout = nullptr;  // optional monitoring split
  std::vector<double> f0_calib, f0_valid, f0_holdout;
};

struct BoostResult {
  CalibratedModel model;
  BoostTrace trace;
  std::vector<double> final_calib, final_valid, final_holdout;
};

// raw = |sum h_i s_i| / n, normalized = raw / sqrt(sum h_i^2 / n);
// an all-zero h returns (0,0) by the 0/0 convention.
std::pair<double, double> violation(std::span<const double> h, std::span<const double> s);
std::pair<double, double> weighted_violation(std::span<const double> h,
                                             std::span<const double> s,
                                             std::span<const double> w);

// eta = (sum h s / n) / (2 c_L sum h^2 / n); the sign carries the
// correlation so f - eta*h always descends. Zero norm -> error.
double adaptive_step(std::span<const double> h, std::span<const double> s, double c_L);

// f <- f - eta*h elementwise, then clip the whole vector into the interval.
void apply_update(std::vector<double>& f, double eta, std::span<const double> h,
                  const std::optional<Projection>& projection);

// Applies one recorded update to f in place: membership from the anchor
// values (which may alias f under dynamic bucketing; membership is resolved
// before f changes), then the step, interval clip, and grid snap. The
// boosting loop and model replay share this routine so serialized models
// reproduce in-loop predictions bit for bit.
void replay_update(const UpdateRecord& u, const Dataset& data,
                   std::span<const std::int32_t> gid, std::span<const double> anchor,
                   const std::optional<Projection>& projection, std::int32_t snap_grid,
                   std::vector<double>& f);

struct RoundCandidate {
  CellKey cell;
  Direction direction;
  double raw = 0.0;
  double delta = 0.0;
  double hs_calib = 0.0;  // fitting-set correlation, drives the step size
  double hh_calib = 0.0;  // fitting-set squared norm
};

struct RoundAudit {
  std::vector<RoundCandidate> candidates;  // ascending (group, bucket) order
  double max_delta = 0.0;                  // stopping quantity
  std::int32_t selected = -1;              // raw-violation argmax, ties to lowest cell
  ResolvedBuckets buckets;
};

// One audit pass at the current state: fits a direction per nonempty
// calibration cell and measures its (raw, normalized) violation on the
// validation split. Anchor values are the initial predictions under Static
// bucketing and the current iterate under Dynamic.
RoundAudit audit_round(const Dataset& calib, std::span<const double> s_calib,
                       std::span<const std::int32_t> gid_calib,
                       std::span<const double> anchor_calib, const Dataset& valid,
                       std::span<const double> s_valid, std::span<const std::int32_t> gid_valid,
                       std::span<const double> anchor_valid, std::int32_t n_groups,
                       const BoostConfig& cfg);

// The boosting loop: audit cells, select the worst raw violation, stop when
// every candidate's normalized violation is within alpha (or a stopping rule
// fires), otherwise step and repeat.
BoostResult run(const BoostData& data, const BoostConfig& cfg);

// Replays the recorded updates; on the calibration rows this reproduces the
// in-loop final values bit-exactly.
std::vector<double> predict(const CalibratedModel& model, const Dataset& data,
                            std::vector<double> initial);

// f0 from the embedded initial model or the recorded init column.
std::vector<double> initial_predictions(const CalibratedModel& model, const Dataset& data);

// Group ids for a dataset under the model's recorded group columns.
std::vector<std::int32_t> model_group_ids(const CalibratedModel& model, const Dataset& data);

// k-fold selection of a cumulative-step budget: each fold is boosted on the
// remaining folds out to the largest grid value, the held fold's loss is read
// at every grid point, and the budget with the lowest mean held loss wins
// (ties -> smaller). An empty grid derives the automatic one.
double cv_select(const Dataset& pool, std::span<const double> f0_pool, const BoostConfig& cfg,
                 std::int32_t k_folds, std::vector<double> grid);

// 12 log-spaced budgets from 0.1 to 2*n^(1/4).
std::vector<double> auto_budget_grid(std::size_t n_pool);

void to_json(nlohmann::json& j, const CalibratedModel& model);
void from_json(const nlohmann::json& j, CalibratedModel& model);
void save_calibrated_model(const std::string& path, const CalibratedModel& model);
CalibratedModel load_calibrated_model(const std::string& path);

}  // namespace mcboost
