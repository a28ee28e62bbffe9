#include "mcboost/shift.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "mcboost/common.hpp"

namespace mcboost {

namespace {

bool is_subgroup(ShiftType t) {
  return t == ShiftType::InteractionReg || t == ShiftType::InteractionNeg ||
         t == ShiftType::HardRegion || t == ShiftType::GroupIndicator;
}

// Original (pre-encoding) level value of a categorical column.
double cat_value(const Dataset& data, std::int32_t col, std::size_t row) {
  if (col < 0 || static_cast<std::size_t>(col) >= data.d_cat())
    throw ConfigError("shift: categorical column index out of range");
  const auto j = static_cast<std::size_t>(col);
  return data.cat_levels[j][static_cast<std::size_t>(data.cat(row, j))];
}

struct ExprParser {
  const std::string& src;
  std::size_t pos = 0;
  double z1, z2, x6, x7;

  void skip() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw ConfigError("shift expression: " + what + " at position " + std::to_string(pos) +
                      " in '" + src + "'");
  }

  double parse_expr() {
    double v = parse_term();
    for (;;) {
      if (eat('+'))
        v += parse_term();
      else if (eat('-'))
        v -= parse_term();
      else
        return v;
    }
  }
  double parse_term() {
    double v = parse_factor();
    for (;;) {
      if (eat('*'))
        v *= parse_factor();
      else if (eat('/'))
        v /= parse_factor();
      else
        return v;
    }
  }
  double parse_factor() {
    const double base = parse_unary();
    if (eat('^')) return std::pow(base, parse_factor());  // right-associative
    return base;
  }
  double parse_unary() {
    if (eat('-')) return -parse_unary();
    if (eat('+')) return parse_unary();
    return parse_primary();
  }
  double parse_primary() {
    skip();
    if (pos >= src.size()) fail("unexpected end of input");
    const char c = src[pos];
    if (c == '(') {
      ++pos;
      const double v = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      const double v = std::strtod(src.c_str() + pos, &end);
      if (end == src.c_str() + pos) fail("bad number");
      pos = static_cast<std::size_t>(end - src.c_str());
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                                  src[pos] == '_'))
        ++pos;
      const std::string name = src.substr(start, pos - start);
      if (name == "z1") return z1;
      if (name == "z2") return z2;
      if (name == "x6") return x6;
      if (name == "x7") return x7;
      if (name == "abs" || name == "exp") {
        if (!eat('(')) fail("expected '(' after " + name);
        const double v = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return name == "abs" ? std::fabs(v) : std::exp(v);
      }
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

std::vector<double> standardized_or_throw(const Dataset& data, const Dataset& reference,
                                          std::int32_t col, const char* which) {
  if (col < 0 || static_cast<std::size_t>(col) >= data.d_cont())
    throw ConfigError(std::string("shift: ") + which + " column index out of range");
  return standardize_column(data, reference, col);
}

}  // namespace

std::vector<double> standardize_column(const Dataset& data, const Dataset& reference,
                                       std::int32_t col) {
  if (col < 0 || static_cast<std::size_t>(col) >= reference.d_cont())
    throw ConfigError("standardize: column index out of range");
  const auto j = static_cast<std::size_t>(col);
  if (reference.n() < 2) throw DataError("standardize: reference needs at least 2 rows");
  double mean = 0.0;
  for (std::size_t i = 0; i < reference.n(); ++i) mean += reference.cont(i, j);
  mean /= static_cast<double>(reference.n());
  double ss = 0.0;
  for (std::size_t i = 0; i < reference.n(); ++i) {
    const double d = reference.cont(i, j) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(reference.n() - 1));
  if (!(sd > 0.0))
    throw DataError("standardize: zero variance in reference column '" +
                    reference.cont_names[j] + "'");
  std::vector<double> z(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) z[i] = (data.cont(i, j) - mean) / sd;
  return z;
}

std::vector<std::vector<double>> standardize(const Dataset& data, const Dataset& reference,
                                             std::span<const std::int32_t> cols) {
  std::vector<std::vector<double>> out;
  for (std::int32_t c : cols) out.push_back(standardize_column(data, reference, c));
  return out;
}

std::vector<double> raw_shift_weights(const Dataset& data, const ShiftSpec& spec,
                                      const Dataset& reference) {
  const std::size_t n = data.n();
  std::vector<double> w(n, 0.0);

  if (spec.type == ShiftType::GroupIndicator) {
    const std::int32_t ng = group_count(spec.groups, data);
    if (spec.group_id < 0 || spec.group_id >= ng)
      throw ConfigError("shift: group id out of range");
    const auto gid = assign_groups(spec.groups, data);
    for (std::size_t i = 0; i < n; ++i) w[i] = gid[i] == spec.group_id ? 1.0 : 0.0;
    return w;
  }

  const auto z1 = standardized_or_throw(data, reference, spec.z1_col, "Z1");
  const auto z2 = standardized_or_throw(data, reference, spec.z2_col, "Z2");

  switch (spec.type) {
    case ShiftType::InteractionReg:
    case ShiftType::InteractionNeg: {
      const auto r1 = standardize_column(reference, reference, spec.z1_col);
      const auto r2 = standardize_column(reference, reference, spec.z2_col);
      std::vector<double> prod_ref(reference.n());
      for (std::size_t i = 0; i < reference.n(); ++i) prod_ref[i] = r1[i] * r2[i];
      if (spec.type == ShiftType::InteractionNeg) {
        const double thr = lower_quantile(prod_ref, 0.20);
        for (std::size_t i = 0; i < n; ++i) w[i] = z1[i] * z2[i] <= thr ? 1.0 : 0.0;
      } else if (spec.one_sided) {
        const double thr = lower_quantile(prod_ref, 0.80);
        for (std::size_t i = 0; i < n; ++i) w[i] = z1[i] * z2[i] >= thr ? 1.0 : 0.0;
      } else {
        const double lo = lower_quantile(prod_ref, 0.10);
        const double hi = lower_quantile(prod_ref, 0.90);
        for (std::size_t i = 0; i < n; ++i) {
          const double p = z1[i] * z2[i];
          w[i] = (p <= lo || p >= hi) ? 1.0 : 0.0;
        }
      }
      break;
    }
    case ShiftType::HardRegion: {
      const auto r1 = standardize_column(reference, reference, spec.z1_col);
      const auto r2 = standardize_column(reference, reference, spec.z2_col);
      std::vector<double> d_ref(reference.n());
      for (std::size_t i = 0; i < reference.n(); ++i)
        d_ref[i] =
            0.5 * std::fabs(r1[i]) + 0.3 * r2[i] * r2[i] + 0.2 * std::fabs(r1[i] * r2[i]);
      const double thr = lower_quantile(d_ref, 0.85);
      for (std::size_t i = 0; i < n; ++i) {
        const double d =
            0.5 * std::fabs(z1[i]) + 0.3 * z2[i] * z2[i] + 0.2 * std::fabs(z1[i] * z2[i]);
        w[i] = d >= thr ? 1.0 : 0.0;
      }
      break;
    }
    case ShiftType::CurvatureTilt:
      for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(0.4 * z2[i] * z2[i]);
      break;
    case ShiftType::HardMixedTilt:
      for (std::size_t i = 0; i < n; ++i) {
        const double x6 = cat_value(data, spec.x6_col, i);
        const double x7 = cat_value(data, spec.x7_col, i);
        w[i] = std::exp(0.30 * std::fabs(z1[i]) + 0.25 * z2[i] * z2[i] +
                        0.25 * z1[i] * z2[i] + 0.25 * x6 + 0.25 * x7);
      }
      break;
    case ShiftType::LocalBump: {
      const double bw2 = 2.0 * 0.8 * 0.8;
      for (std::size_t i = 0; i < n; ++i) {
        const double d1 = z1[i] - 1.2;
        const double d2 = z2[i] + 1.0;
        w[i] = std::exp(-(d1 * d1 + d2 * d2) / bw2);
      }
      break;
    }
    case ShiftType::Custom: {
      if (spec.expression.empty()) throw ConfigError("shift: custom variant needs an expression");
      const bool wants_cat = spec.expression.find("x6") != std::string::npos ||
                             spec.expression.find("x7") != std::string::npos;
      for (std::size_t i = 0; i < n; ++i) {
        const double x6 = wants_cat ? cat_value(data, spec.x6_col, i) : 0.0;
        const double x7 = wants_cat ? cat_value(data, spec.x7_col, i) : 0.0;
        w[i] = eval_shift_expression(spec.expression, z1[i], z2[i], x6, x7);
      }
      break;
    }
    default:
      throw ConfigError("shift: unknown variant");
  }
  return w;
}

std::vector<double> clip_weights(std::vector<double> w, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("shift: clip interval must have lo < hi");
  for (double& v : w) {
    if (v < lo) v = lo;
    if (v > hi) v = hi;
  }
  return w;
}

std::vector<double> make_weights(const Dataset& data, const ShiftSpec& spec,
                                 const Dataset& reference) {
  std::vector<double> w = raw_shift_weights(data, spec, reference);
  if (w.empty()) throw DataError("degenerate shift: no rows");

  if (is_subgroup(spec.type)) {
    double mass = 0.0;
    for (double v : w) mass += v;
    mass /= static_cast<double>(w.size());
    if (!(mass > 0.0)) throw DataError("degenerate shift: empty subgroup");
    for (double& v : w) v /= mass;
    return w;
  }

  w = clip_weights(std::move(w), spec.clip_lo, spec.clip_hi);
  if (spec.normalize_mean_one) {
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    if (!(mean > 0.0)) throw DataError("degenerate shift: zero mean weight");
    for (double& v : w) v /= mean;
  }
  return w;
}

double eval_shift_expression(const std::string& expression, double z1, double z2, double x6,
                             double x7) {
  ExprParser p{expression, 0, z1, z2, x6, x7};
  const double v = p.parse_expr();
  p.skip();
  if (p.pos != expression.size()) p.fail("trailing input");
  return v;
}

EvalReport weighted_eval(std::span<const double> y, std::span<const double> f,
                         std::span<const double> weights,
                         std::span<const std::int32_t> group_ids, std::int32_t n_groups,
                         const EvalOptions& opt, std::span<const double> f_star) {
  return evaluate(y, f, group_ids, n_groups, opt, weights, f_star);
}

ShiftType parse_shift_type(const std::string& name) {
  if (name == "interaction_reg") return ShiftType::InteractionReg;
  if (name == "interaction_neg") return ShiftType::InteractionNeg;
  if (name == "hard_region") return ShiftType::HardRegion;
  if (name == "curvature_tilt") return ShiftType::CurvatureTilt;
  if (name == "hard_mixed_tilt") return ShiftType::HardMixedTilt;
  if (name == "local_bump") return ShiftType::LocalBump;
  if (name == "group_indicator") return ShiftType::GroupIndicator;
  if (name == "custom") return ShiftType::Custom;
  throw ConfigError("unknown shift variant: " + name);
}

std::string shift_type_name(ShiftType type) {
  switch (type) {
    case ShiftType::InteractionReg: return "interaction_reg";
    case ShiftType::InteractionNeg: return "interaction_neg";
    case ShiftType::HardRegion: return "hard_region";
    case ShiftType::CurvatureTilt: return "curvature_tilt";
    case ShiftType::HardMixedTilt: return "hard_mixed_tilt";
    case ShiftType::LocalBump: return "local_bump";
    case ShiftType::GroupIndicator: return "group_indicator";
    case ShiftType::Custom: return "custom";
  }
  throw ConfigError("unknown shift variant");
}

}  // namespace mcboost
