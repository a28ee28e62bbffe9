#include <cmath>

#include "doctest.h"
#include "mcboost/common.hpp"
#include "mcboost/rng.hpp"
#include "mcboost/scores.hpp"

using namespace mcboost;

TEST_SUITE("scores") {

TEST_CASE("squared loss and score") {
  const ScoreKind k = ScoreKind::squared();
  CHECK(loss(k, 1.0, 1.0) == 0.0);
  CHECK(loss(k, 0.0, 2.0) == 2.0);  // (y-u)^2/2
  CHECK(score(k, 2.0, 2.0) == 0.0);
  CHECK(score(k, 1.0, 3.0) == 2.0);  // u - y
}

TEST_CASE("pinball loss and score at the declared convention") {
  const ScoreKind k = ScoreKind::pinball(0.9);
  CHECK(loss(k, 1.0, 0.0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(score(k, 1.0, 0.0) == doctest::Approx(-0.9).epsilon(1e-15));
  CHECK(score(k, 0.0, 1.0) == doctest::Approx(0.1).epsilon(1e-15));
  // Tie y == u uses the representative subgradient 1{y<=u} - tau = 1 - tau.
  CHECK(score(k, 1.0, 1.0) == doctest::Approx(0.1).epsilon(1e-15));

  const ScoreKind half = ScoreKind::pinball(0.5);
  CHECK(loss(half, 0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS((void)ScoreKind::pinball(0.0), ConfigError);
  CHECK_THROWS_AS((void)ScoreKind::pinball(1.0), ConfigError);
}

TEST_CASE("classification codings agree after relabeling") {
  // 0/1-coded formulas must equal the +/-1 formulas at y' = 2y - 1.
  const ScoreKind lp = ScoreKind::logistic(LabelCoding::PlusMinusOne), l01 = ScoreKind::logistic(LabelCoding::ZeroOne);
  const ScoreKind ep = ScoreKind::exponential(LabelCoding::PlusMinusOne), e01 = ScoreKind::exponential(LabelCoding::ZeroOne);
  for (double y01 : {0.0, 1.0}) {
    const double ypm = 2.0 * y01 - 1.0;
    for (double u : {-2.0, -0.3, 0.0, 0.7, 1.5}) {
      CHECK(loss(l01, y01, u) == doctest::Approx(loss(lp, ypm, u)).epsilon(1e-14));
      CHECK(score(l01, y01, u) == doctest::Approx(score(lp, ypm, u)).epsilon(1e-14));
      CHECK(loss(e01, y01, u) == doctest::Approx(loss(ep, ypm, u)).epsilon(1e-14));
      CHECK(score(e01, y01, u) == doctest::Approx(score(ep, ypm, u)).epsilon(1e-14));
    }
  }
}

TEST_CASE("logistic and exponential closed forms") {
  const ScoreKind lp = ScoreKind::logistic(LabelCoding::PlusMinusOne);
  // L = log(1 + exp(-y u)); s = -y / (1 + exp(y u)).
  CHECK(loss(lp, 1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(score(lp, 1.0, 0.0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(score(lp, -1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));

  const ScoreKind ep = ScoreKind::exponential(LabelCoding::PlusMinusOne);
  // L = exp(-y u); s = -y exp(-y u).
  CHECK(loss(ep, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(score(ep, 1.0, 1.0) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-14));
  CHECK(score(ep, -1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("invalid classification labels are rejected") {
  CHECK_THROWS_AS((void)loss(ScoreKind::logistic(LabelCoding::PlusMinusOne), 0.5, 0.0), DataError);
  CHECK_THROWS_AS((void)score(ScoreKind::exponential(LabelCoding::ZeroOne), 2.0, 0.0), DataError);
}

TEST_CASE("default smoothness constants") {
  CHECK(default_smoothness(ScoreKind::squared()) == 0.5);
  CHECK(default_smoothness(ScoreKind::pinball(0.9)) == 0.5);
  CHECK(default_smoothness(ScoreKind::logistic(LabelCoding::PlusMinusOne)) == 0.5);
  CHECK(default_smoothness(ScoreKind::exponential(LabelCoding::ZeroOne)) == 0.5);
}

TEST_CASE("loss is convex in the prediction") {
  Rng r(101);
  for (const ScoreKind& k :
       {ScoreKind::squared(), ScoreKind::pinball(0.3), ScoreKind::pinball(0.9),
        ScoreKind::logistic(LabelCoding::PlusMinusOne), ScoreKind::exponential(LabelCoding::PlusMinusOne)}) {
    for (int t = 0; t < 300; ++t) {
      const bool cls = k.type == ScoreType::Logistic || k.type == ScoreType::Exponential;
      const double y = cls ? (r.next_unit() < 0.5 ? -1.0 : 1.0) : 4.0 * r.next_unit() - 2.0;
      const double u1 = 4.0 * r.next_unit() - 2.0;
      const double u2 = 4.0 * r.next_unit() - 2.0;
      const double lam = r.next_unit();
      const double mid = loss(k, y, lam * u1 + (1.0 - lam) * u2);
      CHECK(mid <= lam * loss(k, y, u1) + (1.0 - lam) * loss(k, y, u2) + 1e-12);
    }
  }
}

TEST_CASE("score is a subgradient of the loss") {
  Rng r(202);
  for (const ScoreKind& k :
       {ScoreKind::squared(), ScoreKind::pinball(0.3), ScoreKind::pinball(0.9),
        ScoreKind::logistic(LabelCoding::ZeroOne), ScoreKind::exponential(LabelCoding::ZeroOne)}) {
    for (int t = 0; t < 300; ++t) {
      const bool cls = k.type == ScoreType::Logistic || k.type == ScoreType::Exponential;
      const double y = cls ? (r.next_unit() < 0.5 ? 0.0 : 1.0) : 4.0 * r.next_unit() - 2.0;
      const double u = 4.0 * r.next_unit() - 2.0;
      const double v = 4.0 * r.next_unit() - 2.0;
      CHECK(loss(k, y, v) - loss(k, y, u) >= score(k, y, u) * (v - u) - 1e-12);
    }
  }
}

TEST_CASE("smoothness and slope envelopes hold") {
  // Squared loss is 1/2-smooth: loss(v) <= loss(u) + score(u)(v-u) + (v-u)^2/2,
  // with equality. Pinball is piecewise linear with slope gap 1, so the
  // first-order error is bounded by |v-u| instead of a quadratic.
  Rng r(303);
  for (int t = 0; t < 500; ++t) {
    const double y = 4.0 * r.next_unit() - 2.0;
    const double u = 4.0 * r.next_unit() - 2.0;
    const double v = 4.0 * r.next_unit() - 2.0;
    const ScoreKind sq = ScoreKind::squared();
    CHECK(loss(sq, y, v) - loss(sq, y, u) <=
          score(sq, y, u) * (v - u) + 0.5 * (v - u) * (v - u) + 1e-12);
    const ScoreKind pb = ScoreKind::pinball(0.7);
    CHECK(std::fabs(loss(pb, y, v) - loss(pb, y, u) - score(pb, y, u) * (v - u)) <=
          std::fabs(v - u) + 1e-12);
  }
}

TEST_CASE("parse and name round trip") {
  for (const std::string& text :
       {"squared", "pinball:0.9", "pinball:0.25", "logistic:pm1", "logistic:01",
        "exponential:pm1", "exponential:01"}) {
    const ScoreKind k = parse_score_kind(text);
    CHECK(parse_score_kind(score_kind_name(k)).type == k.type);
  }
  CHECK(parse_score_kind("squared").type == ScoreType::Squared);
  CHECK(parse_score_kind("pinball:0.9").tau == 0.9);
  CHECK_THROWS_AS((void)parse_score_kind("huber"), ConfigError);
  CHECK_THROWS_AS((void)parse_score_kind("pinball:1.5"), ConfigError);
}

TEST_CASE("json round trip") {
  const ScoreKind k = ScoreKind::pinball(0.35);
  nlohmann::json j;
  to_json(j, k);
  ScoreKind back;
  from_json(j, back);
  CHECK(back.type == k.type);
  CHECK(back.tau == k.tau);
}

}  // TEST_SUITE
