#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcboost {

// Invalid configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or degenerate data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Lower-sample quantile: k-th order statistic with k = ceil(tau*m), no
// interpolation. tau <= 0 returns the minimum, tau >= 1 the maximum.
double lower_quantile_sorted(std::span<const double> sorted, double tau);

// Copies and sorts, then applies the lower-sample rule.
double lower_quantile(std::vector<double> values, double tau);

// Weighted mean with an empty-weights fast path that is bit-identical to the
// weighted path under unit weights (1.0*x == x, sum of ones == n exactly).
double weighted_mean(std::span<const double> x, std::span<const double> w = {});

// Writes content to path via a temp file in the same directory plus rename,
// so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace mcboost
