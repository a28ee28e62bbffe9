#include "mcboost/scores.hpp"

#include <cmath>

#include "mcboost/common.hpp"

namespace mcboost {

namespace {

// log(1 + exp(t)) without overflow for large |t|.
double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

// Maps a classification label to the {-1,+1} margin convention.
double margin_label(const ScoreKind& kind, double y) {
  if (kind.coding == LabelCoding::PlusMinusOne) {
    if (y != -1.0 && y != 1.0)
      throw DataError("label " + std::to_string(y) + " invalid for +/-1 coding");
    return y;
  }
  if (y != 0.0 && y != 1.0)
    throw DataError("label " + std::to_string(y) + " invalid for 0/1 coding");
  return 2.0 * y - 1.0;
}

}  // namespace

ScoreKind ScoreKind::squared() { return ScoreKind{ScoreType::Squared, 0.5, LabelCoding::ZeroOne}; }

ScoreKind ScoreKind::pinball(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pinball tau must be in (0,1)");
  return ScoreKind{ScoreType::Pinball, tau, LabelCoding::ZeroOne};
}

ScoreKind ScoreKind::logistic(LabelCoding coding) {
  return ScoreKind{ScoreType::Logistic, 0.5, coding};
}

ScoreKind ScoreKind::exponential(LabelCoding coding) {
  return ScoreKind{ScoreType::Exponential, 0.5, coding};
}

double loss(const ScoreKind& kind, double y, double u) {
  switch (kind.type) {
    case ScoreType::Squared: {
      const double r = y - u;
      return 0.5 * r * r;
    }
    case ScoreType::Pinball:
      return (y - u) * (kind.tau - (y <= u ? 1.0 : 0.0));
    case ScoreType::Logistic:
      return log1pexp(-u * margin_label(kind, y));
    case ScoreType::Exponential:
      return std::exp(-u * margin_label(kind, y));
  }
  throw ConfigError("unknown score type");
}

double score(const ScoreKind& kind, double y, double u) {
  switch (kind.type) {
    case ScoreType::Squared:
      return u - y;
    case ScoreType::Pinball:
      return (y <= u ? 1.0 : 0.0) - kind.tau;
    case ScoreType::Logistic: {
      const double m = u * margin_label(kind, y);
      // -ly * sigmoid(-m), computed on the stable side.
      if (m >= 0.0) {
        const double e = std::exp(-m);
        return -margin_label(kind, y) * (e / (1.0 + e));
      }
      return -margin_label(kind, y) / (1.0 + std::exp(m));
    }
    case ScoreType::Exponential: {
      const double ly = margin_label(kind, y);
      return -ly * std::exp(-u * ly);
    }
  }
  throw ConfigError("unknown score type");
}

double default_smoothness(const ScoreKind&) { return 0.5; }

void validate_labels(const ScoreKind& kind, std::span<const double> y) {
  if (kind.type != ScoreType::Logistic && kind.type != ScoreType::Exponential) return;
  for (double v : y) (void)margin_label(kind, v);
}

void to_json(nlohmann::json& j, const ScoreKind& kind) {
  switch (kind.type) {
    case ScoreType::Squared:
      j = {{"kind", "squared"}};
      return;
    case ScoreType::Pinball:
      j = {{"kind", "pinball"}, {"tau", kind.tau}};
      return;
    case ScoreType::Logistic:
      j = {{"kind", "logistic"},
           {"coding", kind.coding == LabelCoding::PlusMinusOne ? "pm1" : "01"}};
      return;
    case ScoreType::Exponential:
      j = {{"kind", "exponential"},
           {"coding", kind.coding == LabelCoding::PlusMinusOne ? "pm1" : "01"}};
      return;
  }
}

void from_json(const nlohmann::json& j, ScoreKind& kind) {
  const std::string name = j.at("kind").get<std::string>();
  if (name == "squared") {
    kind = ScoreKind::squared();
  } else if (name == "pinball") {
    kind = ScoreKind::pinball(j.at("tau").get<double>());
  } else if (name == "logistic" || name == "exponential") {
    const std::string coding = j.value("coding", "01");
    if (coding != "pm1" && coding != "01")
      throw ConfigError("score.coding must be 'pm1' or '01'");
    const LabelCoding lc =
        coding == "pm1" ? LabelCoding::PlusMinusOne : LabelCoding::ZeroOne;
    kind = name == "logistic" ? ScoreKind::logistic(lc) : ScoreKind::exponential(lc);
  } else {
    throw ConfigError("unknown score kind: " + name);
  }
}

ScoreKind parse_score_kind(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "squared") return ScoreKind::squared();
  if (head == "pinball") {
    if (arg.empty()) throw ConfigError("pinball requires a tau, e.g. pinball:0.9");
    try {
      return ScoreKind::pinball(std::stod(arg));
    } catch (const std::invalid_argument&) {
      throw ConfigError("cannot parse pinball tau: " + arg);
    }
  }
  if (head == "logistic" || head == "exponential") {
    LabelCoding lc = LabelCoding::ZeroOne;
    if (arg == "pm1")
      lc = LabelCoding::PlusMinusOne;
    else if (!arg.empty() && arg != "01")
      throw ConfigError("label coding must be 'pm1' or '01', got: " + arg);
    return head == "logistic" ? ScoreKind::logistic(lc) : ScoreKind::exponential(lc);
  }
  throw ConfigError("unknown score kind: " + text);
}

std::string score_kind_name(const ScoreKind& kind) {
  nlohmann::json j;
  to_json(j, kind);
  std::string out = j.at("kind").get<std::string>();
  if (kind.type == ScoreType::Pinball) out += ":" + std::to_string(kind.tau);
  return out;
}

}  // namespace mcboost
