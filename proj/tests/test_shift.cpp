#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mcboost/baselines.hpp"
#include "mcboost/common.hpp"
#include "mcboost/shift.hpp"
#include "mcboost/simgen.hpp"

using namespace mcboost;
using testutil::make_data;

TEST_SUITE("shift") {

TEST_CASE("standardization uses the reference moments") {
  const Dataset ref = make_data({{1.0, 2.0, 3.0}}, {}, {0, 0, 0});
  const Dataset other = make_data({{2.0, 4.0}}, {}, {0, 0});
  // Reference mean 2, sd 1 (n-1 denominator).
  const std::vector<double> z = standardize_column(other, ref, 0);
  CHECK(z[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("zero reference variance names the offending column") {
  const Dataset ref = make_data({{5.0, 5.0, 5.0}}, {}, {0, 0, 0});
  try {
    (void)standardize_column(ref, ref, 0);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("x1") != std::string::npos);
  }
}

TEST_CASE("shift expressions follow standard precedence") {
  CHECK(eval_shift_expression("1+2*3", 0, 0, 0, 0) == 7.0);
  CHECK(eval_shift_expression("(1+2)*3", 0, 0, 0, 0) == 9.0);
  CHECK(eval_shift_expression("2^3^2", 0, 0, 0, 0) == 512.0);  // right-associative
  CHECK(eval_shift_expression("-2^2", 0, 0, 0, 0) == 4.0);     // unary binds first
  CHECK(eval_shift_expression("8/4/2", 0, 0, 0, 0) == 1.0);
  CHECK(eval_shift_expression("abs(-3)+exp(0)", 0, 0, 0, 0) == 4.0);
  CHECK(eval_shift_expression("z1*z2 - x6 + x7", 2.0, 3.0, 1.0, 5.0) == 10.0);
  CHECK_THROWS_AS((void)eval_shift_expression("z3", 0, 0, 0, 0), ConfigError);
  CHECK_THROWS_AS((void)eval_shift_expression("1+", 0, 0, 0, 0), ConfigError);
  CHECK_THROWS_AS((void)eval_shift_expression("(1", 0, 0, 0, 0), ConfigError);
  try {
    (void)eval_shift_expression("1 + @", 0, 0, 0, 0);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
}

TEST_CASE("subgroup weights are mass-normalized indicators") {
  SimConfig sc;
  sc.n = 3000;
  sc.seed = 201;
  const Dataset d = generate(sc);

  ShiftSpec spec;
  spec.type = ShiftType::HardRegion;
  const std::vector<double> w = make_weights(d, spec, d);

  std::size_t members = 0;
  double total = 0.0;
  for (double v : w) {
    CHECK(v >= 0.0);
    if (v > 0.0) ++members;
    total += v;
  }
  // Indicator / empirical mass averages to exactly one.
  CHECK(total / static_cast<double>(d.n()) == doctest::Approx(1.0).epsilon(1e-12));
  // The region is the top 15% of the hardness score.
  const double frac = static_cast<double>(members) / static_cast<double>(d.n());
  CHECK(frac > 0.12);
  CHECK(frac < 0.18);
  // All positive weights share one value: 1/mass.
  for (double v : w)
    if (v > 0.0) CHECK(v == doctest::Approx(1.0 / frac).epsilon(1e-12));
}

TEST_CASE("interaction region splits or pools its tail mass") {
  SimConfig sc;
  sc.n = 4000;
  sc.seed = 202;
  const Dataset d = generate(sc);

  ShiftSpec spec;
  spec.type = ShiftType::InteractionReg;
  const std::vector<double> two_sided = make_weights(d, spec, d);
  spec.one_sided = true;
  const std::vector<double> upper_only = make_weights(d, spec, d);

  const auto member_count = [](const std::vector<double>& w) {
    return static_cast<double>(std::count_if(w.begin(), w.end(), [](double v) {
             return v > 0.0;
           })) / static_cast<double>(w.size());
  };
  CHECK(member_count(two_sided) == doctest::Approx(0.20).epsilon(0.03));
  CHECK(member_count(upper_only) == doctest::Approx(0.20).epsilon(0.03));

  // Two-sided membership includes the smallest interaction values, one-sided
  // only the largest ones.
  const std::vector<std::vector<double>> z = standardize(d, d, std::vector<std::int32_t>{0, 1});
  std::size_t lowest = 0;
  double lowest_val = 1e300;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double prod = z[0][i] * z[1][i];
    if (prod < lowest_val) {
      lowest_val = prod;
      lowest = i;
    }
  }
  CHECK(two_sided[lowest] > 0.0);
  CHECK(upper_only[lowest] == 0.0);
}

TEST_CASE("tilt weights are clipped and mean one") {
  SimConfig sc;
  sc.n = 2500;
  sc.seed = 203;
  const Dataset d = generate(sc);

  for (ShiftType type : {ShiftType::CurvatureTilt, ShiftType::HardMixedTilt}) {
    ShiftSpec spec;
    spec.type = type;
    const std::vector<double> w = make_weights(d, spec, d);
    double total = 0.0, lo = 1e300, hi = 0.0;
    for (double v : w) {
      total += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(total / static_cast<double>(d.n()) == doctest::Approx(1.0).epsilon(1e-12));
    // Post-normalization bounds: the clip holds up to the common rescale.
    CHECK(hi / lo <= 10.0 / 0.1 + 1e-9);
  }
}

TEST_CASE("custom expressions drive the tilt") {
  const Dataset d =
      make_data({{1.0, 2.0, 3.0, 4.0}, {0.0, 1.0, 2.0, 3.0}}, {}, {0, 0, 0, 0});
  ShiftSpec spec;
  spec.type = ShiftType::Custom;
  spec.expression = "exp(z1)";
  spec.clip_lo = 1e-6;
  spec.clip_hi = 1e6;
  const std::vector<double> w = make_weights(d, spec, d);
  // Weights are proportional to exp(z1), so consecutive standardized-by-1.29
  // steps have a constant ratio.
  const double r1 = w[1] / w[0], r2 = w[2] / w[1], r3 = w[3] / w[2];
  CHECK(r1 == doctest::Approx(r2).epsilon(1e-10));
  CHECK(r2 == doctest::Approx(r3).epsilon(1e-10));
  CHECK(r1 > 1.0);
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(total / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("group indicator weights select one subgroup") {
  SimConfig sc;
  sc.n = 1000;
  sc.seed = 204;
  const Dataset d = generate(sc);
  ShiftSpec spec;
  spec.type = ShiftType::GroupIndicator;
  spec.groups.cat_columns = {0, 1};
  spec.group_id = 2;
  const std::vector<double> w = make_weights(d, spec, d);
  const auto gid = assign_groups(spec.groups, d);
  double total = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (gid[i] == 2) {
      CHECK(w[i] > 0.0);
    } else {
      CHECK(w[i] == 0.0);
    }
    total += w[i];
  }
  CHECK(total / static_cast<double>(d.n()) == doctest::Approx(1.0).epsilon(1e-12));
  spec.group_id = 99;
  CHECK_THROWS_AS((void)make_weights(d, spec, d), ConfigError);
}

TEST_CASE("local bump concentrates mass near its center") {
  SimConfig sc;
  sc.n = 3000;
  sc.seed = 205;
  const Dataset d = generate(sc);
  ShiftSpec spec;
  spec.type = ShiftType::LocalBump;
  const std::vector<double> w = make_weights(d, spec, d);
  const std::vector<std::vector<double>> z = standardize(d, d, std::vector<std::int32_t>{0, 1});
  // Rows within half a bandwidth of the center must outweigh far-away rows.
  double near = 0.0, far = 0.0;
  std::size_t n_near = 0, n_far = 0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double dist = std::hypot(z[0][i] - 1.2, z[1][i] + 1.0);
    if (dist < 0.4) {
      near += w[i];
      ++n_near;
    } else if (dist > 2.0) {
      far += w[i];
      ++n_far;
    }
  }
  REQUIRE(n_near > 10);
  REQUIRE(n_far > 10);
  CHECK(near / n_near > 2.0 * far / n_far);
}

TEST_CASE("weighted evaluation reduces to plain evaluation at unit weights") {
  SimConfig sc;
  sc.n = 500;
  sc.seed = 206;
  const Dataset d = generate(sc);
  const std::vector<double> f = predict(fit_ols(d), d);
  const auto gid = assign_groups(GroupSpec{{0, 1}}, d);
  EvalOptions opt;
  opt.buckets.count = 3;
  const EvalReport plain = evaluate(d.y, f, gid, 4, opt);
  const EvalReport unit =
      weighted_eval(d.y, f, std::vector<double>(d.n(), 1.0), gid, 4, opt);
  CHECK(plain.mse == unit.mse);
  CHECK(plain.mean_abs_group_bias == unit.mean_abs_group_bias);
}

TEST_CASE("a curvature tilt exposes the linear fit's blind spot") {
  // The benchmark's truth curves in X2^2; reweighting toward large Z2^2
  // raises the squared error of a linear initial fit.
  SimConfig sc;
  sc.n = 4000;
  sc.seed = 207;
  const Dataset d = generate(sc);
  const std::vector<double> f = predict(fit_ols(d), d);
  const auto gid = assign_groups(GroupSpec{}, d);
  ShiftSpec spec;
  spec.type = ShiftType::CurvatureTilt;
  const std::vector<double> w = make_weights(d, spec, d);
  EvalOptions opt;
  const EvalReport unweighted = evaluate(d.y, f, gid, 1, opt);
  const EvalReport tilted = weighted_eval(d.y, f, w, gid, 1, opt);
  CHECK(tilted.mse > unweighted.mse);
}

TEST_CASE("shift names parse and round-trip") {
  for (ShiftType type :
       {ShiftType::InteractionReg, ShiftType::InteractionNeg, ShiftType::HardRegion,
        ShiftType::CurvatureTilt, ShiftType::HardMixedTilt, ShiftType::LocalBump,
        ShiftType::GroupIndicator, ShiftType::Custom})
    CHECK(parse_shift_type(shift_type_name(type)) == type);
  CHECK_THROWS_AS((void)parse_shift_type("sideways"), ConfigError);
}

}  // TEST_SUITE
