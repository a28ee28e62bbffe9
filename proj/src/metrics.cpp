#include "mcboost/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mcboost/boost.hpp"
#include "mcboost/common.hpp"

namespace mcboost {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> f,
                   std::span<const double> w) {
  if (y.size() != f.size()) throw DataError("metrics: outcome/prediction length mismatch");
  if (!w.empty() && w.size() != y.size()) throw DataError("metrics: weight length mismatch");
}

struct Accum {
  double num = 0.0;
  double den = 0.0;
  std::size_t n = 0;
  void add(double x, double wi) {
    num += wi * x;
    den += wi;
    ++n;
  }
  double mean() const { return num / den; }
};

}  // namespace

std::vector<std::pair<std::int32_t, double>> groupwise_bias(
    std::span<const double> y, std::span<const double> f,
    std::span<const std::int32_t> group_ids, std::int32_t n_groups, std::span<const double> w) {
  check_lengths(y, f, w);
  if (group_ids.size() != y.size()) throw DataError("metrics: group id length mismatch");
  std::vector<Accum> acc(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < y.size(); ++i)
    acc[static_cast<std::size_t>(group_ids[i])].add(y[i] - f[i], w.empty() ? 1.0 : w[i]);
  std::vector<std::pair<std::int32_t, double>> out;
  for (std::int32_t g = 0; g < n_groups; ++g) {
    const Accum& a = acc[static_cast<std::size_t>(g)];
    if (a.n > 0 && a.den > 0.0) out.emplace_back(g, a.mean());
  }
  return out;
}

double mean_abs_group_bias(std::span<const double> y, std::span<const double> f,
                           std::span<const std::int32_t> group_ids, std::int32_t n_groups,
                           std::span<const double> w, bool weight_by_size) {
  check_lengths(y, f, w);
  if (group_ids.size() != y.size()) throw DataError("metrics: group id length mismatch");
  std::vector<Accum> acc(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < y.size(); ++i)
    acc[static_cast<std::size_t>(group_ids[i])].add(y[i] - f[i], w.empty() ? 1.0 : w[i]);
  double total = 0.0, mass = 0.0;
  for (const Accum& a : acc) {
    if (a.n == 0 || !(a.den > 0.0)) continue;
    const double share = weight_by_size ? a.den : 1.0;
    total += share * std::fabs(a.mean());
    mass += share;
  }
  return mass > 0.0 ? total / mass : 0.0;
}

std::vector<std::pair<CellKey, CellStats>> cell_calibration_error(
    std::span<const double> y, std::span<const double> f,
    std::span<const std::int32_t> group_ids, std::int32_t n_groups, const BucketSpec& buckets,
    std::span<const double> w) {
  check_lengths(y, f, w);
  if (group_ids.size() != y.size()) throw DataError("metrics: group id length mismatch");
  const ResolvedBuckets rb = resolve_buckets(buckets, f);
  const auto cells = enumerate_cells(group_ids, n_groups, f, rb);
  std::vector<std::pair<CellKey, CellStats>> out;
  for (const auto& [key, rows] : cells) {
    Accum a;
    for (std::int32_t r : rows) {
      const auto i = static_cast<std::size_t>(r);
      a.add(y[i] - f[i], w.empty() ? 1.0 : w[i]);
    }
    if (!(a.den > 0.0)) continue;
    out.push_back({key, CellStats{a.mean(), rows.size()}});
  }
  return out;
}

std::vector<std::pair<std::int32_t, std::pair<double, double>>> coverage(
    std::span<const double> y, std::span<const double> q,
    std::span<const std::int32_t> group_ids, std::int32_t n_groups, double tau,
    std::span<const double> w) {
  check_lengths(y, q, w);
  if (group_ids.size() != y.size()) throw DataError("metrics: group id length mismatch");
  std::vector<Accum> acc(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < y.size(); ++i)
    acc[static_cast<std::size_t>(group_ids[i])].add(y[i] <= q[i] ? 1.0 : 0.0,
                                                    w.empty() ? 1.0 : w[i]);
  std::vector<std::pair<std::int32_t, std::pair<double, double>>> out;
  for (std::int32_t g = 0; g < n_groups; ++g) {
    const Accum& a = acc[static_cast<std::size_t>(g)];
    if (a.n > 0 && a.den > 0.0) out.push_back({g, {a.mean(), a.mean() - tau}});
  }
  return out;
}

double excess_convex_risk(std::span<const double> y, std::span<const double> f,
                          std::span<const double> f_star, const ScoreKind& kind,
                          std::span<const double> w) {
  check_lengths(y, f, w);
  if (f_star.size() != y.size()) throw DataError("metrics: truth length mismatch");
  Accum lf, ls;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    lf.add(loss(kind, y[i], f[i]), wi);
    ls.add(loss(kind, y[i], f_star[i]), wi);
  }
  if (!(lf.den > 0.0)) throw DataError("metrics: zero total weight");
  return lf.mean() - ls.mean();
}

double sup_violation(const std::vector<std::vector<double>>& family, std::span<const double> s,
                     std::span<const double> w) {
  double worst = 0.0;
  for (const auto& h : family) worst = std::max(worst, weighted_violation(h, s, w).second);
  return worst;
}

EvalReport evaluate(std::span<const double> y, std::span<const double> f,
                    std::span<const std::int32_t> group_ids, std::int32_t n_groups,
                    const EvalOptions& opt, std::span<const double> w,
                    std::span<const double> f_star) {
  check_lengths(y, f, w);
  if (group_ids.size() != y.size()) throw DataError("metrics: group id length mismatch");
  if (!w.empty()) {
    double total = 0.0;
    for (double wi : w) {
      if (wi < 0.0) throw DataError("metrics: negative weight");
      total += wi;
    }
    if (!(total > 0.0)) throw DataError("metrics: zero total weight");
  }

  EvalReport rep;
  rep.n = y.size();
  const bool quantile = opt.score.type == ScoreType::Pinball;

  Accum sq, lo, cov;
  std::vector<Accum> g_bias(static_cast<std::size_t>(n_groups));
  std::vector<Accum> g_sq(static_cast<std::size_t>(n_groups));
  std::vector<Accum> g_cov(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - f[i];
    const auto g = static_cast<std::size_t>(group_ids[i]);
    sq.add(r * r, wi);
    lo.add(loss(opt.score, y[i], f[i]), wi);
    g_bias[g].add(r, wi);
    g_sq[g].add(r * r, wi);
    if (quantile) {
      const double c = y[i] <= f[i] ? 1.0 : 0.0;
      cov.add(c, wi);
      g_cov[g].add(c, wi);
    }
  }
  rep.mse = sq.mean();
  rep.mean_loss = lo.mean();
  if (quantile) rep.coverage_overall = cov.mean();

  double total_abs = 0.0, mass = 0.0;
  for (std::int32_t g = 0; g < n_groups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (g_bias[gi].n == 0 || !(g_bias[gi].den > 0.0)) continue;
    GroupStats st;
    st.bias = g_bias[gi].mean();
    st.mse = g_sq[gi].mean();
    st.n = g_bias[gi].n;
    if (quantile) st.coverage = g_cov[gi].mean();
    rep.per_group.emplace_back(g, st);
    const double share = opt.weight_groups_by_size ? g_bias[gi].den : 1.0;
    total_abs += share * std::fabs(st.bias);
    mass += share;
  }
  rep.mean_abs_group_bias = mass > 0.0 ? total_abs / mass : 0.0;

  rep.per_cell = cell_calibration_error(y, f, group_ids, n_groups, opt.buckets, w);
  if (!f_star.empty()) rep.excess_risk = excess_convex_risk(y, f, f_star, opt.score, w);
  return rep;
}

namespace {

nlohmann::json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

void append_csv_num(std::string& out, double v) {
  if (std::isnan(v)) return;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void to_json(nlohmann::json& j, const EvalReport& report) {
  j = nlohmann::json::object();
  j["n"] = report.n;
  j["mse"] = report.mse;
  j["mean_loss"] = report.mean_loss;
  j["mean_abs_group_bias"] = report.mean_abs_group_bias;
  j["excess_risk"] = num_or_null(report.excess_risk);
  j["sup_violation"] = num_or_null(report.sup_violation);
  j["coverage_overall"] = num_or_null(report.coverage_overall);
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& [g, st] : report.per_group) {
    nlohmann::json row = {{"group", g}, {"bias", st.bias}, {"mse", st.mse}, {"n", st.n}};
    row["coverage"] = num_or_null(st.coverage);
    groups.push_back(std::move(row));
  }
  j["per_group"] = std::move(groups);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, st] : report.per_cell)
    cells.push_back({{"group", key.group},
                     {"bucket", key.bucket},
                     {"calibration_error", st.calibration_error},
                     {"n", st.n}});
  j["per_cell"] = std::move(cells);
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "row_type,group,bucket,n,bias,mse,coverage,calibration_error\n";
  for (const auto& [g, st] : report.per_group) {
    out += "group," + std::to_string(g) + ",," + std::to_string(st.n) + ",";
    append_csv_num(out, st.bias);
    out += ",";
    append_csv_num(out, st.mse);
    out += ",";
    append_csv_num(out, st.coverage);
    out += ",\n";
  }
  for (const auto& [key, st] : report.per_cell) {
    out += "cell," + std::to_string(key.group) + "," + std::to_string(key.bucket) + "," +
           std::to_string(st.n) + ",,,,";
    append_csv_num(out, st.calibration_error);
    out += "\n";
  }
  return out;
}

}  // namespace mcboost
