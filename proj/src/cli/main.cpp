#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcboost/baselines.hpp"
#include "mcboost/boost.hpp"
#include "mcboost/common.hpp"
#include "mcboost/instances.hpp"
#include "mcboost/metrics.hpp"
#include "mcboost/scores.hpp"
#include "mcboost/shift.hpp"
#include "mcboost/simgen.hpp"
#include "mcboost/stopping.hpp"
#include "mcboost/trace.hpp"
#include "reproduce.hpp"
#include "util.hpp"

namespace {

using namespace mcboost;
using mcb_cli::cat_column_index;
using mcb_cli::cont_column_index;
using mcb_cli::load_data;
using mcb_cli::parse_group_columns;
using mcb_cli::parse_range;

// JSON config files: flat keys are global options, one nesting level maps to
// subcommand sections. Explicit command-line flags win over config values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> out;
    flatten(j, {}, out);
    return out;
  }

 private:
  static void flatten(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    if (!j.is_object()) throw CLI::ConfigError("config root must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& e : value)
          item.inputs.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      } else if (value.is_string()) {
        item.inputs.push_back(value.get<std::string>());
      } else if (value.is_boolean()) {
        item.inputs.push_back(value.get<bool>() ? "true" : "false");
      } else {
        item.inputs.push_back(value.dump());
      }
      out.push_back(std::move(item));
    }
  }
};

struct SimulateArgs {
  std::size_t n = 1000;
  double sigma_base = 0.5;
  double p6 = 0.5;
  double p7 = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  SimConfig cfg;
  cfg.n = a.n;
  cfg.sigma_base = a.sigma_base;
  cfg.p6 = a.p6;
  cfg.p7 = a.p7;
  cfg.seed = a.seed;
  const Dataset d = generate(cfg);
  write_csv(a.out, d);
  std::cout << "wrote " << d.n() << " rows to " << a.out << "\n";
}

struct FitArgs {
  std::string data, schema, out;
  std::string kind = "ols";  // ols | forest | qforest
  double tau = 0.9;
  std::int32_t trees = 100, depth = 8, min_leaf = 5, mtry = -1;
  bool no_bootstrap = false, no_cat = false;
  std::uint64_t seed = 0;
};

InitialModel fit_initial(const Dataset& train, const FitArgs& a) {
  ForestParams fp;
  fp.n_trees = a.trees;
  fp.max_depth = a.depth;
  fp.min_leaf = a.min_leaf;
  fp.mtry = a.mtry;
  fp.bootstrap = !a.no_bootstrap;
  fp.seed = a.seed;
  if (a.kind == "ols") return fit_ols(train, !a.no_cat);
  if (a.kind == "forest") return fit_forest(train, fp, !a.no_cat);
  if (a.kind == "qforest") return fit_quantile_forest(train, a.tau, fp, !a.no_cat);
  throw ConfigError("unknown initial predictor kind: " + a.kind);
}

void run_fit(const FitArgs& a) {
  const Dataset train = load_data(a.data, a.schema);
  const InitialModel m = fit_initial(train, a);
  save_initial_model(a.out, m);
  std::cout << "fitted " << a.kind << " on " << train.n() << " rows";
  if (m.oob_mse >= 0.0) std::cout << ", oob mse " << m.oob_mse;
  std::cout << ", saved to " << a.out << "\n";
}

struct CalibrateArgs {
  std::string data, schema;
  std::string model_out, trace_out, emit_splits;
  std::string score = "squared";
  std::string auditor = "tree";
  double ridge_lambda = 1e-6;
  std::int32_t depth = 3, min_leaf = 5;
  bool no_cat = false;
  std::string groups;
  std::int32_t buckets = 1;
  std::string bucket_range;
  bool dynamic = false, directional = false, global_scope = false;
  double alpha = 0.01;
  std::string step = "adaptive";
  double c_smooth = -1.0;  // default: score's smoothness constant
  std::int32_t max_iters = 1000;
  std::string stop = "alpha";
  double min_delta = 0.0;
  bool monitor_holdout = false;
  std::string project;
  std::int32_t snap = 0;
  std::string split_fracs = "0.5,0.25";
  bool share_calib_valid = false;
  // initial predictor source
  std::string init_model_path, init_column, train_data;
  FitArgs init_fit;
  std::uint64_t seed = 0;
};

StepRule parse_step(const std::string& text, double c_smooth) {
  if (text == "adaptive") return StepRule::adaptive_rule(c_smooth);
  if (text.rfind("fixed:", 0) == 0) {
    try {
      return StepRule::fixed(std::stod(text.substr(6)));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse fixed step size: " + text);
    }
  }
  throw ConfigError("--step expects 'adaptive' or 'fixed:ETA', got '" + text + "'");
}

std::pair<double, double> parse_fracs(const std::string& text) {
  const auto sep = text.find(',');
  if (sep == std::string::npos)
    throw ConfigError("--split expects 'calib,valid' fractions, got '" + text + "'");
  try {
    return {std::stod(text.substr(0, sep)), std::stod(text.substr(sep + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--split expects 'calib,valid' fractions, got '" + text + "'");
  }
}

void run_calibrate(const CalibrateArgs& a) {
  const Dataset data = load_data(a.data, a.schema);

  SplitSpec ss;
  std::tie(ss.calib_fraction, ss.valid_fraction) = parse_fracs(a.split_fracs);
  ss.share_calib_valid = a.share_calib_valid;
  ss.seed = a.seed;
  const SplitResult sp = split(data, ss);
  const bool has_holdout = sp.holdout.n() > 0;

  // Initial predictions: a saved model, the dataset's init column, or an
  // on-the-fly fit on --train-data (falling back to the unused holdout rows).
  std::optional<InitialModel> initial;
  std::string init_column;
  if (!a.init_model_path.empty()) {
    initial = load_initial_model(a.init_model_path);
  } else if (!a.init_column.empty()) {
    if (data.init.size() != data.n())
      throw DataError("dataset has no init column for --init-column");
    init_column = a.init_column;
  } else {
    Dataset train;
    if (!a.train_data.empty()) {
      train = load_data(a.train_data, a.schema);
    } else if (has_holdout) {
      train = sp.holdout;
    } else {
      throw ConfigError(
          "no rows left to fit the initial predictor; pass --train-data, --init-model, or "
          "--init-column, or leave a holdout share in --split");
    }
    FitArgs fa = a.init_fit;
    fa.seed = a.seed;
    initial = fit_initial(train, fa);
  }
  const auto initial_for = [&](const Dataset& d) {
    if (initial) return predict(*initial, d);
    return d.init;
  };

  BoostConfig cfg;
  cfg.score = parse_score_kind(a.score);
  cfg.auditor = parse_auditor_kind(a.auditor);
  cfg.auditor.ridge_lambda = a.ridge_lambda;
  cfg.auditor.max_depth = a.depth;
  cfg.auditor.min_leaf = a.min_leaf;
  cfg.auditor.include_categorical = !a.no_cat;
  cfg.groups = parse_group_columns(a.groups, data);
  cfg.buckets.count = a.buckets;
  if (!a.bucket_range.empty()) {
    std::tie(cfg.buckets.lo, cfg.buckets.hi) = parse_range(a.bucket_range, "--bucket-range");
    cfg.buckets.auto_range = false;
  }
  cfg.buckets.anchor = a.dynamic ? BucketAnchor::Dynamic : BucketAnchor::Static;
  cfg.buckets.directional = a.directional;
  cfg.alpha = a.alpha;
  cfg.step = parse_step(a.step, a.c_smooth > 0.0 ? a.c_smooth : default_smoothness(cfg.score));
  cfg.max_iters = a.max_iters;
  if (!a.project.empty()) {
    const auto [lo, hi] = parse_range(a.project, "--project");
    cfg.projection = Projection{lo, hi};
  }
  cfg.local_scope = !a.global_scope;
  cfg.stopping = parse_stopping_rule(a.stop);
  cfg.stopping.min_delta = a.min_delta;
  cfg.stopping.monitor_holdout = a.monitor_holdout;
  cfg.snap_grid = a.snap;
  cfg.seed = a.seed;

  if (cfg.stopping.kind == StopKind::CrossVal) {
    std::vector<std::int32_t> pool_rows = sp.calib_rows;
    if (!ss.share_calib_valid)
      pool_rows.insert(pool_rows.end(), sp.valid_rows.begin(), sp.valid_rows.end());
    const Dataset pool = data.subset(pool_rows);
    const double budget = cv_select(pool, initial_for(pool), cfg, cfg.stopping.k_folds, {});
    std::cout << "cv selected budget " << budget << "\n";
    cfg.stopping = StoppingRule::budget_abs(budget);
  }

  BoostData bd;
  bd.calib = &sp.calib;
  bd.valid = &sp.valid;
  bd.holdout = has_holdout ? &sp.holdout : nullptr;
  bd.f0_calib = initial_for(sp.calib);
  bd.f0_valid = initial_for(sp.valid);
  if (has_holdout) bd.f0_holdout = initial_for(sp.holdout);

  BoostResult res = run(bd, cfg);
  res.model.initial = initial;
  res.model.init_column = init_column;
  save_calibrated_model(a.model_out, res.model);
  if (!a.trace_out.empty()) write_trace_csv(a.trace_out, res.trace);
  if (!a.emit_splits.empty()) {
    write_csv(a.emit_splits + ".calib.csv", sp.calib);
    write_csv(a.emit_splits + ".valid.csv", sp.valid);
    if (has_holdout) write_csv(a.emit_splits + ".holdout.csv", sp.holdout);
  }

  const double final_calib = res.trace.records.empty()
                                 ? res.trace.initial_calib_loss
                                 : res.trace.records.back().calib_loss;
  const double final_valid = res.trace.records.empty()
                                 ? res.trace.initial_valid_loss
                                 : res.trace.records.back().valid_loss;
  std::cout << "calibrated in " << res.trace.records.size() << " iterations (stopped by "
            << res.model.terminated_by << "), model updates kept " << res.model.updates.size()
            << "\n"
            << "final calib loss " << final_calib << ", valid loss " << final_valid
            << ", worst normalized violation " << res.trace.final_max_delta << "\n"
            << "saved model to " << a.model_out << "\n";
}

struct EvaluateArgs {
  std::string data, schema;
  std::string model_path, init_model_path;
  std::string score;  // override; defaults to the model's score
  std::string groups = "\x01";  // sentinel: default to the model's group columns
  std::int32_t buckets = 1;
  bool weight_groups_by_size = false;
  std::string out, csv;
};

void run_evaluate(const EvaluateArgs& a) {
  const Dataset data = load_data(a.data, a.schema);

  std::vector<double> f;
  ScoreKind score = ScoreKind::squared();
  GroupSpec groups;
  if (!a.model_path.empty()) {
    const CalibratedModel model = load_calibrated_model(a.model_path);
    f = predict(model, data, initial_predictions(model, data));
    score = model.score;
    if (a.groups == "\x01") {
      for (const std::string& name : model.group_columns)
        groups.cat_columns.push_back(cat_column_index(data, name));
    } else {
      groups = parse_group_columns(a.groups, data);
    }
  } else if (!a.init_model_path.empty()) {
    f = predict(load_initial_model(a.init_model_path), data);
    if (a.groups != "\x01") groups = parse_group_columns(a.groups, data);
  } else {
    throw ConfigError("evaluate needs --model or --init-model");
  }
  if (!a.score.empty()) score = parse_score_kind(a.score);

  EvalOptions opt;
  opt.score = score;
  opt.buckets.count = a.buckets;
  opt.weight_groups_by_size = a.weight_groups_by_size;
  const auto gid = assign_groups(groups, data);
  const EvalReport rep = evaluate(data.y, f, gid, group_count(groups, data), opt,
                                  data.weight, data.truth);

  nlohmann::json j;
  to_json(j, rep);
  if (!a.out.empty()) write_file_atomic(a.out, j.dump(2) + "\n");
  if (!a.csv.empty()) write_file_atomic(a.csv, report_to_csv(rep));
  std::cout << "n " << rep.n << ", mean loss " << rep.mean_loss << ", mse " << rep.mse
            << ", mean abs group bias " << rep.mean_abs_group_bias << "\n";
  if (!a.out.empty()) std::cout << "saved report to " << a.out << "\n";
}

struct ShiftEvalArgs {
  std::string data, reference, schema;
  std::string model_path, init_model_path;
  std::string shift = "curvature_tilt";
  std::string custom;
  bool one_sided = false;
  std::string clip = "0.1:10";
  bool no_normalize = false;
  std::string groups;
  std::int32_t group_id = 0;
  std::string z1 = "", z2 = "", x6 = "", x7 = "";
  std::string score;
  std::int32_t buckets = 1;
  std::string out, csv;
};

void run_shift_eval(const ShiftEvalArgs& a) {
  const Dataset data = load_data(a.data, a.schema);
  const Dataset reference =
      a.reference.empty() || a.reference == a.data ? data : load_data(a.reference, a.schema);

  std::vector<double> f;
  ScoreKind score = ScoreKind::squared();
  GroupSpec groups = parse_group_columns(a.groups, data);
  if (!a.model_path.empty()) {
    const CalibratedModel model = load_calibrated_model(a.model_path);
    f = predict(model, data, initial_predictions(model, data));
    score = model.score;
    if (a.groups.empty())
      for (const std::string& name : model.group_columns)
        groups.cat_columns.push_back(cat_column_index(data, name));
  } else if (!a.init_model_path.empty()) {
    f = predict(load_initial_model(a.init_model_path), data);
  } else {
    throw ConfigError("shift-eval needs --model or --init-model");
  }
  if (!a.score.empty()) score = parse_score_kind(a.score);

  ShiftSpec spec;
  spec.type = parse_shift_type(a.shift);
  spec.one_sided = a.one_sided;
  std::tie(spec.clip_lo, spec.clip_hi) = parse_range(a.clip, "--clip");
  spec.normalize_mean_one = !a.no_normalize;
  spec.groups = groups;
  spec.group_id = a.group_id;
  spec.expression = a.custom;
  if (!a.z1.empty()) spec.z1_col = cont_column_index(data, a.z1);
  if (!a.z2.empty()) spec.z2_col = cont_column_index(data, a.z2);
  if (!a.x6.empty()) spec.x6_col = cat_column_index(data, a.x6);
  if (!a.x7.empty()) spec.x7_col = cat_column_index(data, a.x7);

  const std::vector<double> w = make_weights(data, spec, reference);

  EvalOptions opt;
  opt.score = score;
  opt.buckets.count = a.buckets;
  const auto gid = assign_groups(groups, data);
  const EvalReport rep =
      weighted_eval(data.y, f, w, gid, group_count(groups, data), opt, data.truth);

  double mean_w = 0.0;
  for (double v : w) mean_w += v;
  mean_w /= static_cast<double>(w.size());

  nlohmann::json j;
  to_json(j, rep);
  nlohmann::json outer = {{"shift", shift_type_name(spec.type)},
                          {"mean_weight", mean_w},
                          {"report", std::move(j)}};
  if (!a.out.empty()) write_file_atomic(a.out, outer.dump(2) + "\n");
  if (!a.csv.empty()) write_file_atomic(a.csv, report_to_csv(rep));
  std::cout << "shift " << shift_type_name(spec.type) << ": weighted mean loss "
            << rep.mean_loss << ", weighted mse " << rep.mse << "\n";
  if (!a.out.empty()) std::cout << "saved report to " << a.out << "\n";
}

struct BatchGcpArgs {
  std::string data, schema;
  double tau = 0.9;
  std::string groups;
  std::string init_model_path, init_column;
  double init_const = NAN;
  std::string model_out, report_out;
};

std::vector<double> quantile_initials(const Dataset& data, const std::string& init_model_path,
                                      const std::string& init_column, double init_const) {
  if (!init_model_path.empty()) return predict(load_initial_model(init_model_path), data);
  if (!init_column.empty()) {
    if (data.init.size() != data.n())
      throw DataError("dataset has no init column for --init-column");
    return data.init;
  }
  if (!std::isnan(init_const)) return std::vector<double>(data.n(), init_const);
  throw ConfigError("pass --init-model, --init-column, or --init-const for the base quantiles");
}

void run_batchgcp(const BatchGcpArgs& a) {
  const Dataset data = load_data(a.data, a.schema);
  const GroupSpec groups = parse_group_columns(a.groups, data);
  const std::vector<double> q0 =
      quantile_initials(data, a.init_model_path, a.init_column, a.init_const);

  CalibratedModel model = batch_gcp(data, q0, a.tau, groups);
  if (!a.init_model_path.empty()) model.initial = load_initial_model(a.init_model_path);
  if (!a.init_column.empty()) model.init_column = a.init_column;
  save_calibrated_model(a.model_out, model);

  const std::vector<double> q = predict(model, data, q0);
  const auto gid = assign_groups(groups, data);
  const auto cov = coverage(data.y, q, gid, group_count(groups, data), a.tau);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [g, cv] : cov)
    rows.push_back({{"group", g}, {"coverage", cv.first}, {"deviation", cv.second}});
  const nlohmann::json j = {{"tau", a.tau}, {"per_group", rows}};
  if (!a.report_out.empty()) write_file_atomic(a.report_out, j.dump(2) + "\n");

  std::cout << "batchgcp: " << model.updates.size() << " group corrections at tau " << a.tau
            << "\n";
  for (const auto& [g, cv] : cov)
    std::cout << "  group " << g << ": coverage " << cv.first << "\n";
  std::cout << "saved model to " << a.model_out << "\n";
}

struct MultiMvpArgs {
  std::string data, schema;
  double tau = 0.5;
  std::int32_t grid = 20;
  double alpha = 0.02;
  std::int32_t max_iters = 1000;
  double step_multiplier = 1.0;
  std::string groups;
  std::string init_model_path, init_column;
  double init_const = NAN;
  bool scale = false;
  std::string model_out, trace_out;
};

void run_multimvp(const MultiMvpArgs& a) {
  Dataset data = load_data(a.data, a.schema);
  std::vector<double> q0 =
      quantile_initials(data, a.init_model_path, a.init_column, a.init_const);

  double lo = 0.0, hi = 1.0;
  if (a.scale) {
    lo = data.y[0];
    hi = data.y[0];
    for (double v : data.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double v : q0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw DataError("cannot scale: outcomes are constant");
    for (double& v : data.y) v = (v - lo) / (hi - lo);
    for (double& v : q0) v = (v - lo) / (hi - lo);
  }

  MvpConfig cfg;
  cfg.tau = a.tau;
  cfg.grid = a.grid;
  cfg.groups = parse_group_columns(a.groups, data);
  cfg.alpha = a.alpha;
  cfg.max_iters = a.max_iters;
  cfg.step_multiplier = a.step_multiplier;

  const MvpResult res = multi_mvp(data, q0, cfg);

  nlohmann::json j;
  to_json(j, res.model);
  if (a.scale) j["scale"] = {{"lo", lo}, {"hi", hi}};
  write_file_atomic(a.model_out, j.dump(2) + "\n");
  if (!a.trace_out.empty()) write_trace_csv(a.trace_out, res.trace);

  std::cout << "multimvp: " << res.trace.records.size() << " iterations (stopped by "
            << res.model.terminated_by << "), worst normalized violation "
            << res.trace.final_max_delta << "\n"
            << "saved model to " << a.model_out << "\n";
}

void add_fit_flags(CLI::App* cmd, FitArgs& a, bool with_io) {
  if (with_io) {
    cmd->add_option("--data", a.data, "training CSV")->required();
    cmd->add_option("--schema", a.schema, "explicit schema, e.g. cont:x1,cat:x6,y:y");
    cmd->add_option("--out", a.out, "output model JSON path")->required();
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--init", a.kind, "predictor kind: ols | forest | qforest");
  } else {
    cmd->add_option("--init", a.kind, "on-the-fly initial predictor: ols | forest | qforest");
  }
  cmd->add_option("--init-tau", a.tau, "quantile level for qforest");
  cmd->add_option("--trees", a.trees, "forest size");
  cmd->add_option("--tree-depth", a.depth, "forest tree depth");
  cmd->add_option("--tree-min-leaf", a.min_leaf, "forest minimum leaf size");
  cmd->add_option("--mtry", a.mtry, "features per split; -1 = ceil(d/3), 0 = all");
  cmd->add_flag("--no-bootstrap", a.no_bootstrap, "fit trees on the full sample");
  if (!with_io) return;
  cmd->add_flag("--no-cat", a.no_cat, "exclude categorical columns from fitting");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcb: multicalibration boosting toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file merged under explicit flags");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_version_flag("--version", "mcb 1.0");
  int threads = 1;
  app.add_option("--threads", threads,
                 "worker cap for replications (execution is sequential either way)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate the synthetic benchmark dataset");
  c_sim->add_option("--n", sim.n, "sample size");
  c_sim->add_option("--sigma-base", sim.sigma_base, "base noise scale");
  c_sim->add_option("--p6", sim.p6, "P(x6 = 1)");
  c_sim->add_option("--p7", sim.p7, "P(x7 = 1)");
  c_sim->add_option("--seed", sim.seed, "random seed");
  c_sim->add_option("--out", sim.out, "output CSV path")->required();
  c_sim->callback([&] { run_simulate(sim); });

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit an initial predictor");
  add_fit_flags(c_fit, fit, true);
  c_fit->callback([&] { run_fit(fit); });

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "run multicalibration boosting");
  c_cal->add_option("--data", cal.data, "input CSV")->required();
  c_cal->add_option("--schema", cal.schema, "explicit schema");
  c_cal->add_option("--model", cal.model_out, "output calibrated model JSON")->required();
  c_cal->add_option("--trace", cal.trace_out, "output per-iteration trace CSV");
  c_cal->add_option("--emit-splits", cal.emit_splits,
                    "prefix for <prefix>.{calib,valid,holdout}.csv copies of the splits");
  c_cal->add_option("--score", cal.score,
                    "squared | pinball:T | logistic[:pm1|:01] | exponential[:pm1|:01]");
  c_cal->add_option("--auditor", cal.auditor, "constant | linear | tree");
  c_cal->add_option("--ridge-lambda", cal.ridge_lambda, "linear auditor ridge penalty");
  c_cal->add_option("--depth", cal.depth, "tree auditor depth");
  c_cal->add_option("--min-leaf", cal.min_leaf, "tree auditor minimum leaf size");
  c_cal->add_flag("--no-cat", cal.no_cat, "exclude categorical columns from auditing");
  c_cal->add_option("--groups", cal.groups, "categorical grouping columns, e.g. x6,x7");
  c_cal->add_option("--L,--buckets", cal.buckets, "prediction buckets per group");
  c_cal->add_option("--bucket-range", cal.bucket_range, "fixed bucket range lo:hi");
  c_cal->add_flag("--dynamic", cal.dynamic, "anchor buckets on the current iterate");
  c_cal->add_flag("--directional", cal.directional, "one-sided threshold cells");
  c_cal->add_flag("--global-scope", cal.global_scope, "apply updates to all rows");
  c_cal->add_option("--alpha", cal.alpha, "multicalibration tolerance");
  c_cal->add_option("--step", cal.step, "adaptive | fixed:ETA");
  c_cal->add_option("--c-smooth", cal.c_smooth, "smoothness constant for the adaptive step");
  c_cal->add_option("--max-iters", cal.max_iters, "iteration cap");
  c_cal->add_option("--stop", cal.stop,
                    "alpha | budget:RHO | budget-abs:X | cv:K | patience:P");
  c_cal->add_option("--min-delta", cal.min_delta, "patience improvement threshold");
  c_cal->add_flag("--monitor-holdout", cal.monitor_holdout,
                  "patience monitors holdout loss instead of validation loss");
  c_cal->add_option("--project", cal.project, "projection interval lo:hi");
  c_cal->add_option("--snap", cal.snap, "snap predictions to a 1/L grid (0 = off)");
  c_cal->add_option("--split", cal.split_fracs, "calib,valid fractions of --data");
  c_cal->add_flag("--share-calib-valid", cal.share_calib_valid,
                  "audit on the calibration rows themselves");
  c_cal->add_option("--init-model", cal.init_model_path, "saved initial predictor JSON");
  c_cal->add_option("--init-column", cal.init_column,
                    "use the dataset's init column as initial predictions");
  c_cal->add_option("--train-data", cal.train_data, "separate CSV for on-the-fly --init fits");
  add_fit_flags(c_cal, cal.init_fit, false);
  c_cal->add_option("--seed", cal.seed, "random seed");
  c_cal->callback([&] { run_calibrate(cal); });

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "evaluate a model on a dataset");
  c_ev->add_option("--data", ev.data, "input CSV")->required();
  c_ev->add_option("--schema", ev.schema, "explicit schema");
  c_ev->add_option("--model", ev.model_path, "calibrated model JSON");
  c_ev->add_option("--init-model", ev.init_model_path, "initial predictor JSON");
  c_ev->add_option("--score", ev.score, "score override (defaults to the model's)");
  c_ev->add_option("--groups", ev.groups, "grouping columns (defaults to the model's)");
  c_ev->add_option("--L,--buckets", ev.buckets, "buckets for per-cell calibration error");
  c_ev->add_flag("--weight-groups-by-size", ev.weight_groups_by_size,
                 "size-weighted mean absolute group bias");
  c_ev->add_option("--out", ev.out, "report JSON path");
  c_ev->add_option("--csv", ev.csv, "flat report CSV path");
  c_ev->callback([&] { run_evaluate(ev); });

  ShiftEvalArgs sh;
  auto* c_sh = app.add_subcommand("shift-eval", "weighted evaluation under covariate shift");
  c_sh->add_option("--data", sh.data, "evaluation CSV")->required();
  c_sh->add_option("--reference", sh.reference, "reference CSV (defaults to --data)");
  c_sh->add_option("--schema", sh.schema, "explicit schema");
  c_sh->add_option("--model", sh.model_path, "calibrated model JSON");
  c_sh->add_option("--init-model", sh.init_model_path, "initial predictor JSON");
  c_sh->add_option("--shift", sh.shift,
                   "interaction_reg | interaction_neg | hard_region | curvature_tilt | "
                   "hard_mixed_tilt | local_bump | group_indicator | custom");
  c_sh->add_option("--custom", sh.custom, "expression over z1,z2,x6,x7 for --shift custom");
  c_sh->add_flag("--one-sided", sh.one_sided, "upper-tail interaction_reg");
  c_sh->add_option("--clip", sh.clip, "tilt clip interval lo:hi");
  c_sh->add_flag("--no-normalize", sh.no_normalize, "skip mean-1 normalization of tilts");
  c_sh->add_option("--groups", sh.groups, "grouping columns for the report and group shifts");
  c_sh->add_option("--group-id", sh.group_id, "target group for group_indicator");
  c_sh->add_option("--z1", sh.z1, "continuous column for Z1 (default: first)");
  c_sh->add_option("--z2", sh.z2, "continuous column for Z2 (default: second)");
  c_sh->add_option("--x6", sh.x6, "categorical column for x6 (default: first)");
  c_sh->add_option("--x7", sh.x7, "categorical column for x7 (default: second)");
  c_sh->add_option("--score", sh.score, "score override");
  c_sh->add_option("--L,--buckets", sh.buckets, "buckets for per-cell calibration error");
  c_sh->add_option("--out", sh.out, "report JSON path");
  c_sh->add_option("--csv", sh.csv, "flat report CSV path");
  c_sh->callback([&] { run_shift_eval(sh); });

  BatchGcpArgs bg;
  auto* c_bg = app.add_subcommand("batchgcp", "one-shot group-conditional quantile correction");
  c_bg->add_option("--data", bg.data, "input CSV")->required();
  c_bg->add_option("--schema", bg.schema, "explicit schema");
  c_bg->add_option("--tau", bg.tau, "quantile level");
  c_bg->add_option("--groups", bg.groups, "categorical grouping columns");
  c_bg->add_option("--init-model", bg.init_model_path, "initial quantile model JSON");
  c_bg->add_option("--init-column", bg.init_column, "dataset init column with base quantiles");
  c_bg->add_option("--init-const", bg.init_const, "constant base quantile");
  c_bg->add_option("--model", bg.model_out, "output model JSON")->required();
  c_bg->add_option("--report", bg.report_out, "per-group coverage report JSON");
  c_bg->callback([&] { run_batchgcp(bg); });

  MultiMvpArgs mv;
  auto* c_mv = app.add_subcommand("multimvp", "grid-snapped iterative quantile calibration");
  c_mv->add_option("--data", mv.data, "input CSV")->required();
  c_mv->add_option("--schema", mv.schema, "explicit schema");
  c_mv->add_option("--tau", mv.tau, "quantile level");
  c_mv->add_option("--L,--grid", mv.grid, "grid resolution");
  c_mv->add_option("--alpha", mv.alpha, "stopping tolerance");
  c_mv->add_option("--max-iters", mv.max_iters, "iteration cap");
  c_mv->add_option("--step-multiplier", mv.step_multiplier, "scales each grid move");
  c_mv->add_option("--groups", mv.groups, "categorical grouping columns");
  c_mv->add_option("--init-model", mv.init_model_path, "initial quantile model JSON");
  c_mv->add_option("--init-column", mv.init_column, "dataset init column with base quantiles");
  c_mv->add_option("--init-const", mv.init_const, "constant base quantile");
  c_mv->add_flag("--scale", mv.scale, "min-max scale outcomes into [0,1] first");
  c_mv->add_option("--model", mv.model_out, "output model JSON")->required();
  c_mv->add_option("--trace", mv.trace_out, "output trace CSV");
  c_mv->callback([&] { run_multimvp(mv); });

  mcb_cli::ReproduceArgs rp;
  auto* c_rp = app.add_subcommand("reproduce", "emit a figure's underlying data table");
  c_rp->add_option("--figure", rp.figure, "figure id, 1 through 7")->required();
  c_rp->add_option("--reps", rp.reps, "replications per setting (0 = figure default)");
  c_rp->add_option("--seed", rp.seed, "base seed");
  c_rp->add_option("--out", rp.out, "output CSV path (default figure<N>.csv)");
  c_rp->callback([&] { mcb_cli::run_reproduce(rp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
