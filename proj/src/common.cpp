#include "mcboost/common.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mcboost {

double lower_quantile_sorted(std::span<const double> sorted, double tau) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const auto m = static_cast<std::ptrdiff_t>(sorted.size());
  std::ptrdiff_t k = static_cast<std::ptrdiff_t>(std::ceil(tau * static_cast<double>(m)));
  if (k < 1) k = 1;
  if (k > m) k = m;
  return sorted[static_cast<std::size_t>(k - 1)];
}

double lower_quantile(std::vector<double> values, double tau) {
  if (values.empty()) throw DataError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  return lower_quantile_sorted(values, tau);
}

double weighted_mean(std::span<const double> x, std::span<const double> w) {
  if (x.empty()) throw DataError("mean of empty sample");
  if (!w.empty() && w.size() != x.size()) throw DataError("weight length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    num += wi * x[i];
    den += wi;
  }
  if (den <= 0.0) throw DataError("nonpositive total weight");
  return num / den;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataError("rename failed: " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mcboost
