#include "reproduce.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "mcboost/baselines.hpp"
#include "mcboost/boost.hpp"
#include "mcboost/common.hpp"
#include "mcboost/metrics.hpp"
#include "mcboost/rng.hpp"
#include "mcboost/scores.hpp"
#include "mcboost/shift.hpp"
#include "mcboost/simgen.hpp"
#include "mcboost/stopping.hpp"

namespace mcb_cli {
namespace {

using namespace mcboost;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  out.se = sd / std::sqrt(static_cast<double>(v.size()));
  return out;
}

Dataset sim(std::size_t n, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return generate(cfg);
}

GroupSpec demo_groups() {
  GroupSpec g;
  g.cat_columns = {0, 1};
  return g;
}

InitialModel fit_init(const Dataset& train, const std::string& kind, bool include_cat,
                      std::uint64_t seed) {
  if (kind == "linear") return fit_ols(train, include_cat);
  ForestParams fp;
  fp.n_trees = 60;
  fp.seed = seed;
  return fit_forest(train, fp, include_cat);
}

// One boosting run on freshly simulated pools. The pool's first n_calib rows
// audit, the next n_valid rows validate; cross-validation (when requested)
// resolves its budget on the whole pool before the final run.
struct Experiment {
  std::size_t n_calib = 500;
  std::size_t n_valid = 1000;
  std::size_t n_eval = 2000;
  std::string init = "linear";
  bool init_include_cat = true;
  AuditorKind auditor = AuditorKind::tree();
  GroupSpec groups;
  std::int32_t buckets = 4;
  StepRule step = StepRule::adaptive_rule(0.5);
  StoppingRule stopping = StoppingRule::cross_val(3);
  double alpha = 0.01;
  std::int32_t max_iters = 150;
};

struct RunOutput {
  std::vector<double> f0_eval;  // initial predictions on the eval set
  std::vector<double> f_eval;   // calibrated predictions on the eval set
  BoostTrace trace;
  Dataset eval;
  double truth_loss_eval = 0.0;  // mean squared loss of f* on the eval set
};

RunOutput run_experiment(const Experiment& ex, std::uint64_t seed) {
  const Dataset train = sim(1000, derive_seed(seed, 11));
  const Dataset pool = sim(ex.n_calib + ex.n_valid, derive_seed(seed, 12));
  RunOutput out;
  out.eval = sim(ex.n_eval, derive_seed(seed, 13));

  const InitialModel init = fit_init(train, ex.init, ex.init_include_cat, derive_seed(seed, 14));

  std::vector<std::int32_t> calib_rows(ex.n_calib), valid_rows(ex.n_valid);
  for (std::size_t i = 0; i < ex.n_calib; ++i) calib_rows[i] = static_cast<std::int32_t>(i);
  for (std::size_t i = 0; i < ex.n_valid; ++i)
    valid_rows[i] = static_cast<std::int32_t>(ex.n_calib + i);
  const Dataset calib = pool.subset(calib_rows);
  const Dataset valid = pool.subset(valid_rows);

  BoostConfig cfg;
  cfg.score = ScoreKind::squared();
  cfg.auditor = ex.auditor;
  cfg.groups = ex.groups;
  cfg.buckets.count = ex.buckets;
  cfg.alpha = ex.alpha;
  cfg.step = ex.step;
  cfg.max_iters = ex.max_iters;
  cfg.stopping = ex.stopping;
  cfg.seed = seed;

  if (cfg.stopping.kind == StopKind::CrossVal) {
    const double budget =
        cv_select(pool, predict(init, pool), cfg, cfg.stopping.k_folds, cfg.stopping.grid);
    cfg.stopping = StoppingRule::budget_abs(budget);
  }

  BoostData bd;
  bd.calib = &calib;
  bd.valid = &valid;
  bd.holdout = &out.eval;
  bd.f0_calib = predict(init, calib);
  bd.f0_valid = predict(init, valid);
  bd.f0_holdout = predict(init, out.eval);

  BoostResult res = run(bd, cfg);
  out.f0_eval = bd.f0_holdout;
  out.f_eval = predict(res.model, out.eval, bd.f0_holdout);
  out.trace = std::move(res.trace);

  double tl = 0.0;
  for (std::size_t i = 0; i < out.eval.n(); ++i)
    tl += loss(cfg.score, out.eval.y[i], out.eval.truth[i]);
  out.truth_loss_eval = tl / static_cast<double>(out.eval.n());
  return out;
}

void emit(const std::string& path, const std::string& table) {
  write_file_atomic(path, table);
  std::cout << "wrote " << path << "\n";
}

// Test MSE and mean absolute groupwise bias of the two initial predictors as
// the training sample grows. No calibration happens here; the table shows
// that global accuracy and subgroup bias move independently.
void figure1(std::int32_t reps, std::uint64_t seed, const std::string& path) {
  const std::vector<std::size_t> sizes = {500, 2000, 8000};
  const std::vector<std::string> inits = {"linear", "forest"};
  std::string csv = "n,init,metric,mean,se\n";
  for (std::size_t n : sizes) {
    for (const std::string& init : inits) {
      std::vector<double> mse_reps, bias_reps;
      for (std::int32_t r = 0; r < reps; ++r) {
        const std::uint64_t rs = derive_seed(seed, (n << 8) + static_cast<std::uint64_t>(r));
        const Dataset train = sim(n, derive_seed(rs, 1));
        const Dataset test = sim(4000, derive_seed(rs, 2));
        const InitialModel m = fit_init(train, init, true, derive_seed(rs, 3));
        const std::vector<double> f = predict(m, test);
        const auto gid = assign_groups(demo_groups(), test);
        double mse = 0.0;
        for (std::size_t i = 0; i < test.n(); ++i)
          mse += (test.y[i] - f[i]) * (test.y[i] - f[i]);
        mse_reps.push_back(mse / static_cast<double>(test.n()));
        bias_reps.push_back(mean_abs_group_bias(test.y, f, gid, 4));
      }
      const MeanSe m1 = mean_se(mse_reps), m2 = mean_se(bias_reps);
      csv += std::to_string(n) + "," + init + ",test_mse," + fmt(m1.mean) + "," + fmt(m1.se) + "\n";
      csv += std::to_string(n) + "," + init + ",mean_abs_group_bias," + fmt(m2.mean) + "," +
             fmt(m2.se) + "\n";
    }
  }
  emit(path, csv);
}

// Excess squared loss on a fresh evaluation set along the boosting path,
// indexed by cumulative step size. Linear initial predictor, tree auditor,
// fixed step; panels vary groups, buckets, and the calibration sample size.
void figure2(std::int32_t reps, std::uint64_t seed, const std::string& path) {
  const std::vector<std::size_t> sizes = {500, 2000};
  const std::vector<std::pair<std::int32_t, std::int32_t>> structure = {
      {1, 1}, {1, 4}, {4, 1}, {4, 4}};  // (group count, buckets)
  std::string csv = "n_calib,n_groups,buckets,rep,iter,cum_budget,excess_loss\n";
  for (std::size_t n : sizes) {
    for (const auto& [n_groups, buckets] : structure) {
      for (std::int32_t r = 0; r < reps; ++r) {
        Experiment ex;
        ex.n_calib = n;
        ex.init = "linear";
        ex.groups = n_groups == 4 ? demo_groups() : GroupSpec{};
        ex.buckets = buckets;
        ex.step = StepRule::fixed(0.05);
        ex.stopping = StoppingRule::alpha_only();
        ex.alpha = 1e-4;
        ex.max_iters = 120;
        const std::uint64_t rs = derive_seed(seed, (n << 10) + (n_groups << 5) +
                                                       (buckets << 2) +
                                                       static_cast<std::uint64_t>(r));
        const RunOutput out = run_experiment(ex, rs);
        const std::string prefix = std::to_string(n) + "," + std::to_string(n_groups) + "," +
                                   std::to_string(buckets) + "," + std::to_string(r) + ",";
        csv += prefix + "0,0," +
               fmt(out.trace.initial_holdout_loss - out.truth_loss_eval) + "\n";
        for (const TraceRecord& rec : out.trace.records)
          csv += prefix + std::to_string(rec.iter) + "," + fmt(rec.cum_budget) + "," +
                 fmt(rec.holdout_loss - out.truth_loss_eval) + "\n";
      }
    }
  }
  emit(path, csv);
}

// Final excess squared loss against the calibration sample size, comparing
// stopping rules. Linear initial predictor, tree auditor, four groups.
void figure3(std::int32_t reps, std::uint64_t seed, const std::string& path) {
  const std::vector<std::size_t> sizes = {250, 500, 1000, 2000};
  const std::vector<std::pair<std::string, StoppingRule>> stops = {
      {"budget_1_4", StoppingRule::budget(0.25)},
      {"budget_1_6", StoppingRule::budget(1.0 / 6.0)},
      {"cv_3", StoppingRule::cross_val(3)},
      {"patience_5", StoppingRule::patience_rule(5)},
  };
  std::string csv = "n_calib,stop,metric,mean,se\n";
  for (std::size_t n : sizes) {
    for (std::size_t si = 0; si < stops.size(); ++si) {
      std::vector<double> excess_reps;
      for (std::int32_t r = 0; r < reps; ++r) {
        Experiment ex;
        ex.n_calib = n;
        ex.init = "linear";
        ex.groups = demo_groups();
        ex.stopping = stops[si].second;
        const std::uint64_t rs =
            derive_seed(seed, (n << 8) + (si << 4) + static_cast<std::uint64_t>(r));
        const RunOutput out = run_experiment(ex, rs);
        excess_reps.push_back(excess_convex_risk(out.eval.y, out.f_eval, out.eval.truth,
                                                 ScoreKind::squared()));
      }
      const MeanSe m = mean_se(excess_reps);
      csv += std::to_string(n) + "," + stops[si].first + ",excess_loss," + fmt(m.mean) + "," +
             fmt(m.se) + "\n";
    }
  }
  emit(path, csv);
}

// Shared grid behind the groupwise bias and groupwise MSE tables: panels vary
// the group partition and whether categorical features are visible, crossed
// with initial predictor and auditor, before and after calibration.
void figure_groupwise(std::int32_t reps, std::uint64_t seed, const std::string& path,
                      const std::string& metric) {
  struct Panel {
    std::string name;
    bool grouped;
    bool include_cat;  // in both the initial fit and the audit
  };
  const std::vector<Panel> panels = {
      {"nogroup", false, true}, {"group", true, true}, {"nogroup_nocat", false, false}};
  const std::vector<std::size_t> sizes = {500, 2000};
  const std::vector<std::string> inits = {"linear", "forest"};
  const std::vector<std::pair<std::string, AuditorKind>> auditors = {
      {"tree", AuditorKind::tree()},
      {"constant", AuditorKind::constant()},
      {"linear", AuditorKind::linear()},
  };
  std::string csv = "panel,n_calib,init,auditor,model,metric,mean,se\n";
  for (const Panel& panel : panels) {
    for (std::size_t n : sizes) {
      for (const std::string& init : inits) {
        for (std::size_t ai = 0; ai < auditors.size(); ++ai) {
          std::vector<double> before_reps, after_reps;
          for (std::int32_t r = 0; r < reps; ++r) {
            Experiment ex;
            ex.n_calib = n;
            ex.init = init;
            ex.init_include_cat = panel.include_cat;
            ex.auditor = auditors[ai].second;
            ex.auditor.include_categorical = panel.include_cat;
            ex.groups = panel.grouped ? demo_groups() : GroupSpec{};
            const std::uint64_t rs = derive_seed(
                seed, (n << 12) + ((init == "forest" ? 1u : 0u) << 10) + (ai << 6) +
                          ((&panel - panels.data()) << 3) + static_cast<std::uint64_t>(r));
            const RunOutput out = run_experiment(ex, rs);
            const auto gid = assign_groups(demo_groups(), out.eval);
            if (metric == "bias") {
              before_reps.push_back(mean_abs_group_bias(out.eval.y, out.f0_eval, gid, 4));
              after_reps.push_back(mean_abs_group_bias(out.eval.y, out.f_eval, gid, 4));
            } else {
              double b = 0.0, a = 0.0;
              for (std::size_t i = 0; i < out.eval.n(); ++i) {
                b += (out.eval.y[i] - out.f0_eval[i]) * (out.eval.y[i] - out.f0_eval[i]);
                a += (out.eval.y[i] - out.f_eval[i]) * (out.eval.y[i] - out.f_eval[i]);
              }
              before_reps.push_back(b / static_cast<double>(out.eval.n()));
              after_reps.push_back(a / static_cast<double>(out.eval.n()));
            }
          }
          const MeanSe mb = mean_se(before_reps), ma = mean_se(after_reps);
          const std::string prefix = panel.name + "," + std::to_string(n) + "," + init + "," +
                                     auditors[ai].first + ",";
          csv += prefix + "initial," + metric + "," + fmt(mb.mean) + "," + fmt(mb.se) + "\n";
          csv += prefix + "mcboost," + metric + "," + fmt(ma.mean) + "," + fmt(ma.se) + "\n";
        }
      }
    }
  }
  emit(path, csv);
}

// Per-(group, bucket) conditional calibration errors before and after
// calibration. Forest initial predictor, tree auditor; buckets are anchored
// on each model's own predictions, so rows pair cell labels, not regions.
void figure5(std::int32_t reps, std::uint64_t seed, const std::string& path) {
  std::string csv =
      "panel,rep,group,bucket,n_initial,error_initial,n_mcboost,error_mcboost\n";
  for (const bool grouped : {false, true}) {
    for (std::int32_t r = 0; r < reps; ++r) {
      Experiment ex;
      ex.n_calib = 2000;
      ex.n_eval = 4000;
      ex.init = "forest";
      ex.groups = grouped ? demo_groups() : GroupSpec{};
      const RunOutput out =
          run_experiment(ex, derive_seed(seed, (grouped ? 1u << 16 : 0u) + static_cast<std::uint64_t>(r)));
      const auto gid = assign_groups(ex.groups, out.eval);
      const std::int32_t n_groups = grouped ? 4 : 1;
      BucketSpec bs;
      bs.count = 4;
      const auto before = cell_calibration_error(out.eval.y, out.f0_eval, gid, n_groups, bs);
      const auto after = cell_calibration_error(out.eval.y, out.f_eval, gid, n_groups, bs);
      const std::string panel = grouped ? "group" : "nogroup";
      // Both lists are ascending by (group, bucket); merge on the key so a
      // cell empty under one model leaves that model's fields blank.
      std::size_t ib = 0, ia = 0;
      while (ib < before.size() || ia < after.size()) {
        const bool hb = ib < before.size() &&
                        (ia >= after.size() || !(after[ia].first < before[ib].first));
        const bool ha = ia < after.size() &&
                        (ib >= before.size() || !(before[ib].first < after[ia].first));
        const CellKey key = hb ? before[ib].first : after[ia].first;
        csv += panel + "," + std::to_string(r) + "," + std::to_string(key.group) + "," +
               std::to_string(key.bucket) + ",";
        csv += hb ? std::to_string(before[ib].second.n) + "," +
                        fmt(before[ib].second.calibration_error)
                  : ",";
        csv += ",";
        csv += ha ? std::to_string(after[ia].second.n) + "," +
                        fmt(after[ia].second.calibration_error)
                  : ",";
        csv += "\n";
        if (hb) ++ib;
        if (ha) ++ia;
      }
    }
  }
  emit(path, csv);
}

// Weighted bias and MSE on structured subgroups and tilted shifts, before and
// after calibration, across initial predictors and auditors.
void figure7(std::int32_t reps, std::uint64_t seed, const std::string& path) {
  const std::vector<ShiftType> shifts = {ShiftType::HardRegion, ShiftType::CurvatureTilt,
                                         ShiftType::LocalBump, ShiftType::InteractionReg};
  const std::vector<std::size_t> sizes = {500, 2000};
  const std::vector<std::string> inits = {"linear", "forest"};
  const std::vector<std::pair<std::string, AuditorKind>> auditors = {
      {"tree", AuditorKind::tree()},
      {"constant", AuditorKind::constant()},
      {"linear", AuditorKind::linear()},
  };
  std::string csv = "shift,n_calib,init,auditor,model,metric,mean,se\n";
  for (std::size_t n : sizes) {
    for (const std::string& init : inits) {
      for (std::size_t ai = 0; ai < auditors.size(); ++ai) {
        // One calibration per setting and rep; the four shifts reuse it.
        std::vector<RunOutput> runs;
        std::vector<std::vector<double>> weights_per_shift(shifts.size());
        for (std::int32_t r = 0; r < reps; ++r) {
          Experiment ex;
          ex.n_calib = n;
          ex.n_eval = 4000;
          ex.init = init;
          ex.auditor = auditors[ai].second;
          ex.groups = demo_groups();
          const std::uint64_t rs = derive_seed(
              seed, (n << 10) + ((init == "forest" ? 1u : 0u) << 8) + (ai << 5) +
                        static_cast<std::uint64_t>(r));
          runs.push_back(run_experiment(ex, rs));
        }
        for (std::size_t si = 0; si < shifts.size(); ++si) {
          std::vector<double> b_before, b_after, m_before, m_after;
          for (const RunOutput& out : runs) {
            ShiftSpec spec;
            spec.type = shifts[si];
            const std::vector<double> w = make_weights(out.eval, spec, out.eval);
            double wb0 = 0.0, wb1 = 0.0, wm0 = 0.0, wm1 = 0.0, wsum = 0.0;
            for (std::size_t i = 0; i < out.eval.n(); ++i) {
              const double e0 = out.f0_eval[i] - out.eval.y[i];
              const double e1 = out.f_eval[i] - out.eval.y[i];
              wb0 += w[i] * e0;
              wb1 += w[i] * e1;
              wm0 += w[i] * e0 * e0;
              wm1 += w[i] * e1 * e1;
              wsum += w[i];
            }
            b_before.push_back(std::fabs(wb0 / wsum));
            b_after.push_back(std::fabs(wb1 / wsum));
            m_before.push_back(wm0 / wsum);
            m_after.push_back(wm1 / wsum);
          }
          const std::string prefix = shift_type_name(shifts[si]) + "," + std::to_string(n) +
                                     "," + init + "," + auditors[ai].first + ",";
          const auto row = [&](const std::string& model, const std::string& metric,
                               const std::vector<double>& v) {
            const MeanSe m = mean_se(v);
            csv += prefix + model + "," + metric + "," + fmt(m.mean) + "," + fmt(m.se) + "\n";
          };
          row("initial", "bias", b_before);
          row("mcboost", "bias", b_after);
          row("initial", "mse", m_before);
          row("mcboost", "mse", m_after);
        }
      }
    }
  }
  emit(path, csv);
}

}  // namespace

void run_reproduce(const ReproduceArgs& args) {
  const std::string path =
      args.out.empty() ? "figure" + std::to_string(args.figure) + ".csv" : args.out;
  const auto reps = [&](std::int32_t dflt) { return args.reps > 0 ? args.reps : dflt; };
  switch (args.figure) {
    case 1: figure1(reps(5), args.seed, path); break;
    case 2: figure2(reps(1), args.seed, path); break;
    case 3: figure3(reps(5), args.seed, path); break;
    case 4: figure_groupwise(reps(3), args.seed, path, "bias"); break;
    case 5: figure5(reps(3), args.seed, path); break;
    case 6: figure_groupwise(reps(3), args.seed, path, "mse"); break;
    case 7: figure7(reps(3), args.seed, path); break;
    default:
      throw ConfigError("unknown figure id " + std::to_string(args.figure) +
                        "; figures 1 through 7 are available");
  }
}

}  // namespace mcb_cli
