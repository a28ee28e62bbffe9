#include "mcboost/instances.hpp"

#include <algorithm>
#include <cmath>

#include "mcboost/auditors.hpp"
#include "mcboost/common.hpp"
#include "mcboost/scores.hpp"

namespace mcboost {

namespace {

Direction constant_direction(double value) {
  Direction d;
  d.type = AuditorType::Constant;
  d.constant = value;
  return d;
}

double mean_pinball(const ScoreKind& kind, std::span<const double> y,
                    std::span<const double> f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += loss(kind, y[i], f[i]);
  return sum / static_cast<double>(y.size());
}

}  // namespace

CalibratedModel batch_gcp(const Dataset& data, std::span<const double> initial_quantiles,
                          double tau, const GroupSpec& groups) {
  if (initial_quantiles.size() != data.n())
    throw DataError("initial quantiles do not match the dataset size");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile level must lie in (0,1)");

  const std::int32_t n_groups = group_count(groups, data);
  const auto gid = assign_groups(groups, data);

  CalibratedModel model;
  model.score = ScoreKind::pinball(tau);
  model.group_columns = group_column_names(groups, data);
  model.anchor = BucketAnchor::Static;
  model.snap_grid = 0;
  model.terminated_by = "one_shot";

  ResolvedBuckets rb;
  rb.count = 1;
  rb.lo = 0.0;
  rb.hi = 1.0;
  rb.directional = false;

  std::vector<std::vector<double>> residuals(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < data.n(); ++i)
    residuals[static_cast<std::size_t>(gid[i])].push_back(data.y[i] - initial_quantiles[i]);

  for (std::int32_t g = 0; g < n_groups; ++g) {
    auto& r = residuals[static_cast<std::size_t>(g)];
    if (r.empty()) continue;
    const double beta = lower_quantile(r, tau);
    UpdateRecord u;
    u.eta = -1.0;
    u.direction = constant_direction(beta);
    u.group_id = g;
    u.bucket_id = 0;
    u.local = true;
    u.buckets = rb;
    model.updates.push_back(std::move(u));
  }
  return model;
}

MvpResult multi_mvp(const Dataset& data, std::span<const double> initial_quantiles,
                    const MvpConfig& config) {
  if (initial_quantiles.size() != data.n())
    throw DataError("initial quantiles do not match the dataset size");
  if (!(config.tau > 0.0 && config.tau < 1.0))
    throw ConfigError("quantile level must lie in (0,1)");
  if (config.grid < 1) throw ConfigError("grid resolution must be at least 1");
  if (!(config.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (config.max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (!(config.step_multiplier > 0.0)) throw ConfigError("step multiplier must be positive");

  const std::int32_t L = config.grid;
  const std::int32_t n_groups = group_count(config.groups, data);
  const auto gid = assign_groups(config.groups, data);
  const double tau = config.tau;

  MvpResult out;
  CalibratedModel& model = out.model;
  model.score = ScoreKind::pinball(tau);
  model.group_columns = group_column_names(config.groups, data);
  model.anchor = BucketAnchor::Dynamic;
  model.projection = Projection{0.0, 1.0};
  model.snap_grid = L;
  BoostTrace& trace = out.trace;

  std::vector<double>& f = out.final_q;
  f.assign(initial_quantiles.begin(), initial_quantiles.end());
  for (double& v : f) v = snap_to_grid(v, L);

  // One bucket per grid value, centered so l/L lands in bucket l robustly.
  ResolvedBuckets rb;
  rb.count = L + 1;
  rb.lo = -0.5 / L;
  rb.hi = 1.0 + 0.5 / L;
  rb.directional = false;

  const auto n = static_cast<double>(data.n());
  trace.initial_calib_loss = mean_pinball(model.score, data.y, f);
  trace.initial_valid_loss = trace.initial_calib_loss;
  trace.initial_holdout_loss = NAN;

  const auto coverage_at = [&](const std::vector<std::int32_t>& rows, double q) {
    std::size_t covered = 0;
    for (std::int32_t r : rows)
      if (data.y[static_cast<std::size_t>(r)] <= q) ++covered;
    return static_cast<double>(covered) / static_cast<double>(rows.size());
  };

  std::string terminated;
  double cum = 0.0;
  for (std::int32_t b = 1; b <= config.max_iters; ++b) {
    const auto cells = enumerate_cells(gid, n_groups, f, rb);
    if (cells.empty()) {
      terminated = "alpha";
      trace.final_max_delta = 0.0;
      break;
    }

    double max_delta = 0.0, best_delta = 0.0;
    std::size_t best_idx = 0;
    std::vector<double> cov(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& rows = cells[c].second;
      const double q_cell =
          static_cast<double>(cells[c].first.bucket) / static_cast<double>(L);
      cov[c] = coverage_at(rows, q_cell);
      const double p = static_cast<double>(rows.size()) / n;
      const double delta = std::sqrt(p) * std::fabs(cov[c] - tau);
      max_delta = std::max(max_delta, delta);
      if (delta > best_delta) {
        best_delta = delta;
        best_idx = c;
      }
    }
    trace.final_max_delta = max_delta;
    if (max_delta <= config.alpha) {
      terminated = "alpha";
      break;
    }

    const CellKey key = cells[best_idx].first;
    const auto& rows = cells[best_idx].second;
    const double base = static_cast<double>(key.bucket) / static_cast<double>(L);

    // Literal coverage at base + d/L, no clipping: smaller |d| wins ties and
    // the negative side is probed first within each magnitude.
    double best_gap = std::fabs(cov[best_idx] - tau);
    std::int32_t best_d = 0;
    for (std::int32_t k = 1; k <= L; ++k) {
      for (const std::int32_t d : {-k, k}) {
        const double gap =
            std::fabs(coverage_at(rows, base + static_cast<double>(d) / L) - tau);
        if (gap < best_gap) {
          best_gap = gap;
          best_d = d;
        }
      }
    }
    if (best_d == 0) {
      terminated = "stalled";
      break;
    }

    const double delta_eff =
        config.step_multiplier * (static_cast<double>(best_d) / static_cast<double>(L));
    UpdateRecord u;
    u.eta = -delta_eff;
    u.direction = constant_direction(1.0);
    u.group_id = key.group;
    u.bucket_id = key.bucket;
    u.local = true;
    u.buckets = rb;
    replay_update(u, data, gid, f, model.projection, L, f);
    cum += std::fabs(delta_eff);
    model.updates.push_back(std::move(u));

    TraceRecord rec;
    rec.iter = b;
    rec.cell_g = key.group;
    rec.cell_l = key.bucket;
    const double p_sel = static_cast<double>(rows.size()) / n;
    rec.raw = p_sel * std::fabs(cov[best_idx] - tau);
    rec.delta = best_delta;
    rec.max_delta = max_delta;
    rec.eta = -delta_eff;
    rec.cum_budget = cum;
    rec.calib_loss = mean_pinball(model.score, data.y, f);
    rec.valid_loss = rec.calib_loss;
    rec.holdout_loss = NAN;
    trace.records.push_back(rec);
  }

  if (terminated.empty()) terminated = "max_iters";
  model.terminated_by = terminated;
  trace.terminated_by = terminated;
  return out;
}

}  // namespace mcboost
