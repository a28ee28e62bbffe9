#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mcboost/common.hpp"
#include "mcboost/dataset.hpp"

using namespace mcboost;

namespace {

std::string temp_path(const std::string& stem) {
  return "/tmp/mcboost_test_" + stem + ".csv";
}

// Sorted row signatures, so split comparisons ignore row order.
std::vector<std::string> row_signatures(const Dataset& d) {
  std::vector<std::string> sigs;
  for (std::size_t i = 0; i < d.n(); ++i) {
    char buf[64];
    std::string s;
    for (std::size_t j = 0; j < d.d_cont(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g|", d.cont(i, j));
      s += buf;
    }
    for (std::size_t j = 0; j < d.d_cat(); ++j) s += std::to_string(d.cat(i, j)) + "|";
    std::snprintf(buf, sizeof buf, "%.17g", d.y[i]);
    s += buf;
    sigs.push_back(s);
  }
  std::sort(sigs.begin(), sigs.end());
  return sigs;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("schema parsing") {
  const auto schema = parse_schema("cont:x1,cont:x2,cat:x6,y:y,weight:w,init:q0,truth:f_star");
  REQUIRE(schema.size() == 7);
  CHECK(schema[0].role == ColumnRole::Continuous);
  CHECK(schema[0].column == "x1");
  CHECK(schema[2].role == ColumnRole::Categorical);
  CHECK(schema[3].role == ColumnRole::Outcome);
  CHECK(schema[4].role == ColumnRole::Weight);
  CHECK(schema[5].role == ColumnRole::Init);
  CHECK(schema[6].role == ColumnRole::Truth);
  CHECK_THROWS_AS((void)parse_schema("bogus:x1,y:y"), ConfigError);
}

TEST_CASE("loading rejects a schema without an outcome column") {
  const std::string path = temp_path("no_outcome");
  write_file_atomic(path, "x1\n0.5\n1.5\n");
  CHECK_THROWS_AS((void)load_csv(path, parse_schema("cont:x1")), ConfigError);
}

TEST_CASE("csv load basics") {
  const std::string path = temp_path("basic");
  write_file_atomic(path, "x1,x6,y\n0.5,2,1.0\n1.5,5,2.0\n2.5,2,3.0\n");
  const Dataset d = load_csv(path, parse_schema("cont:x1,cat:x6,y:y"));
  CHECK(d.n() == 3);
  CHECK(d.d_cont() == 1);
  CHECK(d.d_cat() == 1);
  // Categorical values {2,5} recode to dense {0,1} with levels retained.
  CHECK(d.cat(0, 0) == 0);
  CHECK(d.cat(1, 0) == 1);
  CHECK(d.cat(2, 0) == 0);
  REQUIRE(d.cat_levels.size() == 1);
  CHECK(d.cat_levels[0] == std::vector<double>{2.0, 5.0});
}

TEST_CASE("csv errors carry location") {
  const std::string path = temp_path("errs");
  write_file_atomic(path, "x1,y\n");
  CHECK_THROWS_AS((void)load_csv(path, parse_schema("cont:x1,y:y")), DataError);

  write_file_atomic(path, "x1,y\n1.0,2.0\n");
  CHECK_THROWS_AS((void)load_csv(path, parse_schema("cont:x1,cont:missing,y:y")), DataError);

  write_file_atomic(path, "x1,y\nabc,2.0\n");
  CHECK_THROWS_AS((void)load_csv(path, parse_schema("cont:x1,y:y")), DataError);
}

TEST_CASE("write then load is the identity") {
  Dataset d = testutil::make_data({{0.1234567890123456, -1.5, 3.0}}, {{0, 1, 1}},
                                  {1.0 / 3.0, -2.718281828459045, 0.0});
  d.weight = {1.0, 0.5, 2.0};
  d.truth = {0.3, 0.4, 0.5};
  const std::string path = temp_path("roundtrip");
  write_csv(path, d);
  const Dataset back =
      load_csv(path, parse_schema("cont:x1,cat:c1,y:y,weight:weight,truth:truth"));
  REQUIRE(back.n() == d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(back.cont(i, 0) == d.cont(i, 0));  // 17 digits: exact round trip
    CHECK(back.cat(i, 0) == d.cat(i, 0));
    CHECK(back.y[i] == d.y[i]);
    CHECK(back.weight[i] == d.weight[i]);
    CHECK(back.truth[i] == d.truth[i]);
  }
}

TEST_CASE("subset keeps schema and picks rows") {
  Dataset d = testutil::make_data({{1, 2, 3, 4}}, {{0, 1, 0, 1}}, {10, 20, 30, 40});
  const std::vector<std::int32_t> rows = {3, 1};
  const Dataset s = d.subset(rows);
  REQUIRE(s.n() == 2);
  CHECK(s.y[0] == 40);
  CHECK(s.y[1] == 20);
  CHECK(s.cont(0, 0) == 4);
  CHECK(s.cat(1, 0) == 1);
  CHECK(s.cat_levels == d.cat_levels);
}

TEST_CASE("split sizes follow the fractions") {
  Dataset d = testutil::make_data({std::vector<double>(100, 0.0)}, {}, std::vector<double>(100, 1.0));
  for (std::size_t i = 0; i < 100; ++i) d.x_cont[i] = static_cast<double>(i);
  SplitSpec spec;
  spec.calib_fraction = 0.5;
  spec.valid_fraction = 0.25;
  const SplitResult r = split(d, spec);
  CHECK(r.calib.n() == 50);
  CHECK(r.valid.n() == 25);
  CHECK(r.holdout.n() == 25);
}

TEST_CASE("shared calibration and validation alias the same rows") {
  Dataset d = testutil::make_data({std::vector<double>(100, 0.0)}, {}, std::vector<double>(100, 1.0));
  for (std::size_t i = 0; i < 100; ++i) d.x_cont[i] = static_cast<double>(i);
  SplitSpec spec;
  spec.calib_fraction = 0.6;
  spec.valid_fraction = 0.0;
  spec.share_calib_valid = true;
  const SplitResult r = split(d, spec);
  CHECK(r.calib.n() == 60);
  CHECK(r.valid.n() == 60);
  CHECK(r.holdout.n() == 40);
  CHECK(row_signatures(r.calib) == row_signatures(r.valid));
}

TEST_CASE("impossible fractions are configuration errors") {
  Dataset d = testutil::make_data({{1, 2, 3, 4}}, {}, {1, 2, 3, 4});
  SplitSpec spec;
  spec.calib_fraction = 1.0;
  spec.valid_fraction = 0.5;
  CHECK_THROWS_AS((void)split(d, spec), ConfigError);
}

TEST_CASE("split is deterministic and invariant to row order") {
  Dataset d = testutil::make_data({std::vector<double>(40, 0.0)}, {}, std::vector<double>(40, 0.0));
  for (std::size_t i = 0; i < 40; ++i) {
    d.x_cont[i] = std::sin(static_cast<double>(i) + 1.0);
    d.y[i] = std::cos(static_cast<double>(i) * 2.0);
  }
  SplitSpec spec;
  spec.calib_fraction = 0.5;
  spec.valid_fraction = 0.25;
  spec.seed = 9;
  const SplitResult a = split(d, spec);
  const SplitResult b = split(d, spec);
  CHECK(row_signatures(a.calib) == row_signatures(b.calib));

  // Reverse the rows; each split must hold the same multiset of rows.
  std::vector<std::int32_t> rev(40);
  for (std::size_t i = 0; i < 40; ++i) rev[i] = static_cast<std::int32_t>(39 - i);
  const SplitResult c = split(d.subset(rev), spec);
  CHECK(row_signatures(a.calib) == row_signatures(c.calib));
  CHECK(row_signatures(a.valid) == row_signatures(c.valid));
  CHECK(row_signatures(a.holdout) == row_signatures(c.holdout));
}

}  // TEST_SUITE
