#include "mcboost/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "mcboost/common.hpp"
#include "mcboost/linalg.hpp"
#include "mcboost/rng.hpp"

namespace mcboost {

namespace {

void check_schema(const InitialModel& model, const Dataset& data) {
  if (model.cont_names != data.cont_names || model.cat_names != data.cat_names)
    throw DataError("model/dataset schema mismatch: column names differ");
}

std::int32_t resolve_mtry(const ForestParams& params, std::int32_t d_total) {
  if (params.mtry < 0) return (d_total + 2) / 3;  // ceil(d/3)
  if (params.mtry == 0 || params.mtry > d_total) return d_total;
  return params.mtry;
}

std::vector<std::vector<TreeNode>> grow_forest(const Dataset& data, const ForestParams& params,
                                               bool include_categorical, bool keep_leaf_samples,
                                               std::vector<std::vector<std::vector<double>>>* leaves,
                                               double* oob_mse) {
  if (data.n() == 0) throw DataError("cannot fit a forest on an empty dataset");
  if (params.n_trees < 1) throw ConfigError("forest needs at least one tree");
  const auto n = data.n();
  const auto d_total =
      static_cast<std::int32_t>(data.d_cont() + (include_categorical ? data.d_cat() : 0));

  CartParams cart;
  cart.max_depth = params.max_depth;
  cart.min_leaf = params.min_leaf;
  cart.include_categorical = include_categorical;
  cart.mtry = resolve_mtry(params, d_total);
  if (cart.mtry >= d_total) cart.mtry = 0;  // full scan, no rng draw needed

  Rng master(params.seed);
  std::vector<std::vector<TreeNode>> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  if (leaves) leaves->clear();

  std::vector<double> oob_sum(n, 0.0);
  std::vector<std::int32_t> oob_count(n, 0);
  std::vector<std::int32_t> rows(n);
  std::vector<std::uint8_t> in_bag(n);

  for (std::int32_t t = 0; t < params.n_trees; ++t) {
    Rng rng = master.split(static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      std::fill(in_bag.begin(), in_bag.end(), std::uint8_t{0});
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::int32_t>(rng.next_below(n));
        rows[i] = r;
        in_bag[static_cast<std::size_t>(r)] = 1;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::int32_t>(i);
    }
    CartResult res = build_cart(data, data.y, rows, cart, &rng, keep_leaf_samples);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i]) continue;
        oob_sum[i] += eval_tree(res.nodes, data, i);
        oob_count[i] += 1;
      }
    }
    trees.push_back(std::move(res.nodes));
    if (leaves) leaves->push_back(std::move(res.leaf_samples));
  }

  if (oob_mse) {
    *oob_mse = -1.0;
    if (params.bootstrap) {
      double sse = 0.0;
      std::int64_t m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (oob_count[i] == 0) continue;
        const double e = data.y[i] - oob_sum[i] / oob_count[i];
        sse += e * e;
        m += 1;
      }
      if (m > 0) *oob_mse = sse / static_cast<double>(m);
    }
  }
  return trees;
}

}  // namespace

InitialModel fit_ols(const Dataset& data, bool include_categorical) {
  if (data.n() == 0) throw DataError("cannot fit on an empty dataset");

  std::vector<LinearTerm> terms;
  for (std::size_t j = 0; j < data.d_cont(); ++j)
    terms.push_back({false, static_cast<std::int32_t>(j), 0, 0.0});
  if (include_categorical)
    for (std::size_t c = 0; c < data.d_cat(); ++c)
      for (std::int32_t l = 1; l < data.cat_cardinality(c); ++l)
        terms.push_back({true, static_cast<std::int32_t>(c), l, 0.0});

  const std::size_t p = terms.size();
  const std::size_t dim = p + 1;
  if (data.n() <= p) throw DataError("fewer rows than design columns");

  std::vector<double> row_x(dim), gram(dim * dim, 0.0), rhs(dim, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    row_x[0] = 1.0;
    for (std::size_t t = 0; t < p; ++t) {
      const LinearTerm& term = terms[t];
      row_x[t + 1] = term.categorical
                         ? (data.cat(i, static_cast<std::size_t>(term.index)) == term.level
                                ? 1.0
                                : 0.0)
                         : data.cont(i, static_cast<std::size_t>(term.index));
    }
    for (std::size_t a = 0; a < dim; ++a) {
      rhs[a] += row_x[a] * data.y[i];
      for (std::size_t b = a; b < dim; ++b) gram[a * dim + b] += row_x[a] * row_x[b];
    }
  }
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < a; ++b) gram[a * dim + b] = gram[b * dim + a];

  InitialModel model;
  model.type = InitialType::OLS;
  model.include_categorical = include_categorical;
  model.cont_names = data.cont_names;
  model.cat_names = data.cat_names;

  std::vector<double> theta;
  if (!cholesky_solve(gram, rhs, dim, theta)) {
    double trace = 0.0;
    for (std::size_t a = 0; a < dim; ++a) trace += gram[a * dim + a];
    double lam = 1e-8 * trace;
    for (int attempt = 0; attempt < 10; ++attempt) {
      std::vector<double> a_try = gram;
      for (std::size_t t = 0; t < dim; ++t) a_try[t * dim + t] += lam;
      if (cholesky_solve(std::move(a_try), rhs, dim, theta)) break;
      lam *= 10.0;
    }
    if (theta.empty()) throw DataError("degenerate design: least squares unsolvable");
    model.ridge_fallback = true;
  }

  model.intercept = theta[0];
  for (std::size_t t = 0; t < p; ++t) terms[t].coef = theta[t + 1];
  model.terms = std::move(terms);
  return model;
}

InitialModel fit_forest(const Dataset& data, const ForestParams& params,
                        bool include_categorical) {
  InitialModel model;
  model.type = InitialType::Forest;
  model.include_categorical = include_categorical;
  model.cont_names = data.cont_names;
  model.cat_names = data.cat_names;
  model.params = params;
  model.trees = grow_forest(data, params, include_categorical, false, nullptr, &model.oob_mse);
  return model;
}

InitialModel fit_quantile_forest(const Dataset& data, double tau, const ForestParams& params,
                                 bool include_categorical) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("quantile level must lie in (0,1]");
  InitialModel model;
  model.type = InitialType::QuantileForest;
  model.include_categorical = include_categorical;
  model.cont_names = data.cont_names;
  model.cat_names = data.cat_names;
  model.params = params;
  model.tau = tau;
  model.trees =
      grow_forest(data, params, include_categorical, true, &model.leaf_samples, &model.oob_mse);
  return model;
}

std::vector<double> predict(const InitialModel& model, const Dataset& data) {
  check_schema(model, data);
  const std::size_t n = data.n();
  std::vector<double> out(n, 0.0);

  switch (model.type) {
    case InitialType::OLS: {
      Direction dir;
      dir.type = AuditorType::Linear;
      dir.intercept = model.intercept;
      dir.terms = model.terms;
      dir.d_cont = data.d_cont();
      return evaluate(dir, data);
    }
    case InitialType::Forest: {
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& tree : model.trees) sum += eval_tree(tree, data, i);
        out[i] = sum / static_cast<double>(model.trees.size());
      }
      return out;
    }
    case InitialType::QuantileForest: {
      std::vector<double> pooled;
      for (std::size_t i = 0; i < n; ++i) {
        pooled.clear();
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
          const auto leaf = static_cast<std::size_t>(tree_leaf(model.trees[t], data, i));
          const auto& samples = model.leaf_samples[t][leaf];
          pooled.insert(pooled.end(), samples.begin(), samples.end());
        }
        if (pooled.empty()) throw DataError("quantile forest has empty leaves");
        out[i] = lower_quantile(pooled, model.tau);
      }
      return out;
    }
  }
  throw ConfigError("unknown initial model type");
}

namespace {

nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TreeNode& n : nodes)
    arr.push_back({{"feature", n.feature},
                   {"cat", n.categorical},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"value", n.value}});
  return arr;
}

std::vector<TreeNode> nodes_from_json(const nlohmann::json& arr) {
  std::vector<TreeNode> nodes;
  for (const auto& n : arr) {
    TreeNode node;
    node.feature = n.at("feature").get<std::int32_t>();
    node.categorical = n.at("cat").get<bool>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<std::int32_t>();
    node.right = n.at("right").get<std::int32_t>();
    node.value = n.at("value").get<double>();
    nodes.push_back(node);
  }
  return nodes;
}

}  // namespace

void to_json(nlohmann::json& j, const InitialModel& model) {
  j = nlohmann::json::object();
  j["cont_names"] = model.cont_names;
  j["cat_names"] = model.cat_names;
  j["include_categorical"] = model.include_categorical;
  switch (model.type) {
    case InitialType::OLS: {
      j["type"] = "ols";
      j["intercept"] = model.intercept;
      nlohmann::json terms = nlohmann::json::array();
      for (const LinearTerm& t : model.terms)
        terms.push_back(
            {{"cat", t.categorical}, {"index", t.index}, {"level", t.level}, {"coef", t.coef}});
      j["terms"] = std::move(terms);
      j["ridge_fallback"] = model.ridge_fallback;
      break;
    }
    case InitialType::Forest:
    case InitialType::QuantileForest: {
      j["type"] = model.type == InitialType::Forest ? "forest" : "qforest";
      j["params"] = {{"n_trees", model.params.n_trees},   {"max_depth", model.params.max_depth},
                     {"min_leaf", model.params.min_leaf}, {"mtry", model.params.mtry},
                     {"bootstrap", model.params.bootstrap}, {"seed", model.params.seed}};
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& tree : model.trees) trees.push_back(nodes_to_json(tree));
      j["trees"] = std::move(trees);
      if (model.oob_mse >= 0.0) j["oob_mse"] = model.oob_mse;
      if (model.type == InitialType::QuantileForest) {
        j["tau"] = model.tau;
        j["leaf_samples"] = model.leaf_samples;
      }
      break;
    }
  }
}

void from_json(const nlohmann::json& j, InitialModel& model) {
  model = InitialModel{};
  const std::string type = j.at("type").get<std::string>();
  model.cont_names = j.at("cont_names").get<std::vector<std::string>>();
  model.cat_names = j.at("cat_names").get<std::vector<std::string>>();
  model.include_categorical = j.at("include_categorical").get<bool>();
  if (type == "ols") {
    model.type = InitialType::OLS;
    model.intercept = j.at("intercept").get<double>();
    for (const auto& t : j.at("terms"))
      model.terms.push_back({t.at("cat").get<bool>(), t.at("index").get<std::int32_t>(),
                             t.at("level").get<std::int32_t>(), t.at("coef").get<double>()});
    model.ridge_fallback = j.value("ridge_fallback", false);
  } else if (type == "forest" || type == "qforest") {
    model.type = type == "forest" ? InitialType::Forest : InitialType::QuantileForest;
    const auto& p = j.at("params");
    model.params.n_trees = p.at("n_trees").get<std::int32_t>();
    model.params.max_depth = p.at("max_depth").get<std::int32_t>();
    model.params.min_leaf = p.at("min_leaf").get<std::int32_t>();
    model.params.mtry = p.at("mtry").get<std::int32_t>();
    model.params.bootstrap = p.at("bootstrap").get<bool>();
    model.params.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& tree : j.at("trees")) model.trees.push_back(nodes_from_json(tree));
    model.oob_mse = j.value("oob_mse", -1.0);
    if (model.type == InitialType::QuantileForest) {
      model.tau = j.at("tau").get<double>();
      model.leaf_samples =
          j.at("leaf_samples").get<std::vector<std::vector<std::vector<double>>>>();
    }
  } else {
    throw ConfigError("unknown initial model type '" + type + "'");
  }
}

void save_initial_model(const std::string& path, const InitialModel& model) {
  nlohmann::json j;
  to_json(j, model);
  j["format_version"] = 1;
  write_file_atomic(path, j.dump(2) + "\n");
}

InitialModel load_initial_model(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  InitialModel model;
  from_json(j, model);
  return model;
}

}  // namespace mcboost
