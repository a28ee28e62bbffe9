#pragma once

#include <span>
#include <string>

#include "json.hpp"

namespace mcboost {

enum class ScoreType { Squared, Pinball, Logistic, Exponential };

enum class LabelCoding { PlusMinusOne, ZeroOne };

// Objective family: squared error, pinball at level tau, or one of the two
// classification losses under the declared label coding.
struct ScoreKind {
  ScoreType type = ScoreType::Squared;
  double tau = 0.5;                             // Pinball only
  LabelCoding coding = LabelCoding::ZeroOne;    // Logistic/Exponential only

  static ScoreKind squared();
  static ScoreKind pinball(double tau);
  static ScoreKind logistic(LabelCoding coding = LabelCoding::ZeroOne);
  static ScoreKind exponential(LabelCoding coding = LabelCoding::ZeroOne);
};

// L(y, u). Pinball: (y-u)(tau - 1{y<=u}).
double loss(const ScoreKind& kind, double y, double u);

// Representative subgradient s(y, u) of u -> loss(y, u).
// Squared: u - y. Pinball: 1{y<=u} - tau. At ties (y == u) the indicator
// convention applies; no randomization.
double score(const ScoreKind& kind, double y, double u);

// Smoothness constant c_L for the adaptive step. 0.5 for every kind; the
// non-squared losses use it as a damping default, overridable in config.
double default_smoothness(const ScoreKind& kind);

// Checks classification labels against the declared coding; throws DataError
// naming the first offending value. No-op for squared/pinball.
void validate_labels(const ScoreKind& kind, std::span<const double> y);

void to_json(nlohmann::json& j, const ScoreKind& kind);
void from_json(const nlohmann::json& j, ScoreKind& kind);

// Parses CLI notation: "squared", "pinball:0.9", "logistic:pm1",
// "exponential:01". Coding defaults to 01 when omitted.
ScoreKind parse_score_kind(const std::string& text);
std::string score_kind_name(const ScoreKind& kind);

}  // namespace mcboost
