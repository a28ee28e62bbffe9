#include "mcboost/auditors.hpp"

#include <cmath>
#include <cstddef>

#include "mcboost/common.hpp"
#include "mcboost/linalg.hpp"

namespace mcboost {

AuditorKind AuditorKind::constant() { return AuditorKind{}; }

AuditorKind AuditorKind::linear(double ridge_lambda, bool include_categorical) {
  AuditorKind k;
  k.type = AuditorType::Linear;
  k.ridge_lambda = ridge_lambda;
  k.include_categorical = include_categorical;
  return k;
}

AuditorKind AuditorKind::tree(std::int32_t max_depth, std::int32_t min_leaf,
                              bool include_categorical) {
  AuditorKind k;
  k.type = AuditorType::Tree;
  k.max_depth = max_depth;
  k.min_leaf = min_leaf;
  k.include_categorical = include_categorical;
  return k;
}

Direction fit_constant(std::span<const double> scores, std::span<const std::int32_t> rows) {
  if (rows.empty()) throw DataError("empty cell: no rows to fit");
  double sum = 0.0;
  for (std::int32_t r : rows) sum += scores[static_cast<std::size_t>(r)];
  Direction dir;
  dir.type = AuditorType::Constant;
  dir.constant = sum / static_cast<double>(rows.size());
  return dir;
}

Direction fit_linear(const Dataset& data, std::span<const double> scores,
                     std::span<const std::int32_t> rows, double ridge_lambda,
                     bool include_categorical) {
  if (rows.empty()) throw DataError("empty cell: no rows to fit");
  if (ridge_lambda < 0.0) throw ConfigError("ridge lambda must be nonnegative");

  // Column layout: intercept, continuous features, then one-hot categorical
  // levels 1..K-1 per included column.
  std::vector<LinearTerm> terms;
  for (std::size_t j = 0; j < data.d_cont(); ++j)
    terms.push_back({false, static_cast<std::int32_t>(j), 0, 0.0});
  if (include_categorical)
    for (std::size_t c = 0; c < data.d_cat(); ++c)
      for (std::int32_t l = 1; l < data.cat_cardinality(c); ++l)
        terms.push_back({true, static_cast<std::int32_t>(c), l, 0.0});

  const std::size_t p = terms.size();
  const std::size_t dim = p + 1;
  std::vector<double> row_x(dim);
  std::vector<double> gram(dim * dim, 0.0), rhs(dim, 0.0);
  for (std::int32_t r : rows) {
    const auto i = static_cast<std::size_t>(r);
    row_x[0] = 1.0;
    for (std::size_t t = 0; t < p; ++t) {
      const LinearTerm& term = terms[t];
      row_x[t + 1] = term.categorical
                         ? (data.cat(i, static_cast<std::size_t>(term.index)) == term.level
                                ? 1.0
                                : 0.0)
                         : data.cont(i, static_cast<std::size_t>(term.index));
    }
    const double s = scores[i];
    for (std::size_t a = 0; a < dim; ++a) {
      rhs[a] += row_x[a] * s;
      for (std::size_t b = a; b < dim; ++b) gram[a * dim + b] += row_x[a] * row_x[b];
    }
  }
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < a; ++b) gram[a * dim + b] = gram[b * dim + a];

  double trace = 0.0;
  for (std::size_t a = 0; a < dim; ++a) trace += gram[a * dim + a];

  std::vector<double> theta;
  double lam = ridge_lambda;
  for (int attempt = 0; attempt < 10; ++attempt) {
    std::vector<double> a_try = gram;
    for (std::size_t t = 1; t < dim; ++t) a_try[t * dim + t] += lam;
    if (cholesky_solve(std::move(a_try), rhs, dim, theta)) break;
    theta.clear();
    lam = std::max(lam * 10.0, std::max(ridge_lambda, 1e-8 * trace));
  }
  if (theta.empty()) {
    // Degenerate beyond repair: fall back to the constant fit.
    Direction dir = fit_constant(scores, rows);
    dir.type = AuditorType::Linear;
    dir.intercept = dir.constant;
    dir.constant = 0.0;
    dir.d_cont = data.d_cont();
    return dir;
  }

  Direction dir;
  dir.type = AuditorType::Linear;
  dir.intercept = theta[0];
  for (std::size_t t = 0; t < p; ++t) terms[t].coef = theta[t + 1];
  dir.terms = std::move(terms);
  dir.d_cont = data.d_cont();
  return dir;
}

Direction fit_tree(const Dataset& data, std::span<const double> scores,
                   std::span<const std::int32_t> rows, const AuditorKind& kind) {
  if (rows.empty()) throw DataError("empty cell: no rows to fit");
  CartParams params;
  params.max_depth = kind.max_depth;
  params.min_leaf = kind.min_leaf;
  params.include_categorical = kind.include_categorical;
  CartResult tree = build_cart(data, scores, rows, params);
  Direction dir;
  dir.type = AuditorType::Tree;
  dir.nodes = std::move(tree.nodes);
  dir.d_cont = data.d_cont();
  return dir;
}

Direction fit_direction(const Dataset& data, std::span<const double> scores,
                        std::span<const std::int32_t> rows, const AuditorKind& kind) {
  switch (kind.type) {
    case AuditorType::Constant:
      return fit_constant(scores, rows);
    case AuditorType::Linear:
      return fit_linear(data, scores, rows, kind.ridge_lambda, kind.include_categorical);
    case AuditorType::Tree:
      return fit_tree(data, scores, rows, kind);
  }
  throw ConfigError("unknown auditor kind");
}

double direction_value(const Direction& dir, const Dataset& data, std::size_t row) {
  switch (dir.type) {
    case AuditorType::Constant:
      return dir.constant;
    case AuditorType::Linear: {
      double v = dir.intercept;
      for (const LinearTerm& term : dir.terms) {
        if (term.categorical) {
          if (data.cat(row, static_cast<std::size_t>(term.index)) == term.level) v += term.coef;
        } else {
          v += term.coef * data.cont(row, static_cast<std::size_t>(term.index));
        }
      }
      return v;
    }
    case AuditorType::Tree:
      return eval_tree(dir.nodes, data, row);
  }
  return 0.0;
}

std::vector<double> evaluate(const Direction& dir, const Dataset& data) {
  const std::size_t n = data.n();
  if (!dir.cell_mask.empty() && dir.cell_mask.size() != n)
    throw DataError("direction cell mask does not match dataset size");
  if (dir.type != AuditorType::Constant && dir.d_cont != data.d_cont())
    throw DataError("direction schema mismatch: continuous column count differs");
  for (const LinearTerm& term : dir.terms)
    if (term.categorical && static_cast<std::size_t>(term.index) >= data.d_cat())
      throw DataError("direction schema mismatch: categorical column out of range");

  std::vector<double> h(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!dir.cell_mask.empty() && dir.cell_mask[i] == 0) continue;
    h[i] = direction_value(dir, data, i);
  }
  return h;
}

void to_json(nlohmann::json& j, const Direction& dir) {
  switch (dir.type) {
    case AuditorType::Constant:
      j = {{"kind", "constant"}, {"value", dir.constant}};
      break;
    case AuditorType::Linear: {
      nlohmann::json terms = nlohmann::json::array();
      for (const LinearTerm& t : dir.terms)
        terms.push_back({{"cat", t.categorical},
                         {"index", t.index},
                         {"level", t.level},
                         {"coef", t.coef}});
      j = {{"kind", "linear"},
           {"intercept", dir.intercept},
           {"terms", std::move(terms)},
           {"d_cont", dir.d_cont}};
      break;
    }
    case AuditorType::Tree: {
      nlohmann::json nodes = nlohmann::json::array();
      for (const TreeNode& n : dir.nodes)
        nodes.push_back({{"feature", n.feature},
                         {"cat", n.categorical},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value}});
      j = {{"kind", "tree"}, {"nodes", std::move(nodes)}, {"d_cont", dir.d_cont}};
      break;
    }
  }
}

void from_json(const nlohmann::json& j, Direction& dir) {
  dir = Direction{};
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    dir.type = AuditorType::Constant;
    dir.constant = j.at("value").get<double>();
  } else if (kind == "linear") {
    dir.type = AuditorType::Linear;
    dir.intercept = j.at("intercept").get<double>();
    dir.d_cont = j.at("d_cont").get<std::size_t>();
    for (const auto& t : j.at("terms"))
      dir.terms.push_back({t.at("cat").get<bool>(), t.at("index").get<std::int32_t>(),
                           t.at("level").get<std::int32_t>(), t.at("coef").get<double>()});
  } else if (kind == "tree") {
    dir.type = AuditorType::Tree;
    dir.d_cont = j.at("d_cont").get<std::size_t>();
    for (const auto& n : j.at("nodes")) {
      TreeNode node;
      node.feature = n.at("feature").get<std::int32_t>();
      node.categorical = n.at("cat").get<bool>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<std::int32_t>();
      node.right = n.at("right").get<std::int32_t>();
      node.value = n.at("value").get<double>();
      dir.nodes.push_back(node);
    }
  } else {
    throw ConfigError("unknown direction kind '" + kind + "'");
  }
}

void to_json(nlohmann::json& j, const AuditorKind& kind) {
  switch (kind.type) {
    case AuditorType::Constant:
      j = {{"kind", "constant"}};
      break;
    case AuditorType::Linear:
      j = {{"kind", "linear"},
           {"ridge_lambda", kind.ridge_lambda},
           {"include_categorical", kind.include_categorical}};
      break;
    case AuditorType::Tree:
      j = {{"kind", "tree"},
           {"max_depth", kind.max_depth},
           {"min_leaf", kind.min_leaf},
           {"include_categorical", kind.include_categorical}};
      break;
  }
}

void from_json(const nlohmann::json& j, AuditorKind& kind) {
  kind = parse_auditor_kind(j.at("kind").get<std::string>());
  if (j.contains("ridge_lambda")) kind.ridge_lambda = j.at("ridge_lambda").get<double>();
  if (j.contains("max_depth")) kind.max_depth = j.at("max_depth").get<std::int32_t>();
  if (j.contains("min_leaf")) kind.min_leaf = j.at("min_leaf").get<std::int32_t>();
  if (j.contains("include_categorical"))
    kind.include_categorical = j.at("include_categorical").get<bool>();
}

AuditorKind parse_auditor_kind(const std::string& text) {
  if (text == "constant") return AuditorKind::constant();
  if (text == "linear") return AuditorKind::linear();
  if (text == "tree") return AuditorKind::tree();
  throw ConfigError("unknown auditor '" + text + "' (expected constant|linear|tree)");
}

}  // namespace mcboost
