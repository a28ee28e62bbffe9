#include "mcboost/partitions.hpp"

#include <algorithm>
#include <cmath>

#include "mcboost/common.hpp"

namespace mcboost {

std::int32_t group_count(const GroupSpec& spec, const Dataset& data) {
  std::int64_t count = 1;
  for (std::int32_t c : spec.cat_columns) {
    if (c < 0 || static_cast<std::size_t>(c) >= data.d_cat())
      throw ConfigError("group column index " + std::to_string(c) + " out of range");
    count *= data.cat_cardinality(static_cast<std::size_t>(c));
    if (count > (1 << 20)) throw ConfigError("group cross product too large");
  }
  return static_cast<std::int32_t>(count);
}

std::vector<std::int32_t> assign_groups(const GroupSpec& spec, const Dataset& data) {
  (void)group_count(spec, data);  // validates columns
  std::vector<std::int32_t> ids(data.n(), 0);
  for (std::int32_t c : spec.cat_columns) {
    const auto j = static_cast<std::size_t>(c);
    const std::int32_t k = data.cat_cardinality(j);
    for (std::size_t i = 0; i < data.n(); ++i) ids[i] = ids[i] * k + data.cat(i, j);
  }
  return ids;
}

std::vector<std::string> group_column_names(const GroupSpec& spec, const Dataset& data) {
  std::vector<std::string> names;
  for (std::int32_t c : spec.cat_columns) {
    if (c < 0 || static_cast<std::size_t>(c) >= data.d_cat())
      throw ConfigError("group column index out of range");
    names.push_back(data.cat_names[static_cast<std::size_t>(c)]);
  }
  return names;
}

ResolvedBuckets resolve_buckets(const BucketSpec& spec, std::span<const double> anchor) {
  if (spec.count < 1) throw ConfigError("bucket count L must be >= 1");
  ResolvedBuckets rb;
  rb.count = spec.count;
  rb.directional = spec.directional;
  if (spec.auto_range) {
    if (anchor.empty()) throw ConfigError("auto bucket range needs anchor predictions");
    double lo = anchor[0], hi = anchor[0];
    for (double v : anchor) {
      if (std::isnan(v)) throw DataError("NaN prediction in bucket anchor");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    rb.lo = lo;
    rb.hi = hi;
  } else {
    if (!(spec.lo < spec.hi)) throw ConfigError("bucket range requires lo < hi");
    rb.lo = spec.lo;
    rb.hi = spec.hi;
  }
  return rb;
}

std::int32_t bucket_of(double v, const ResolvedBuckets& rb) {
  if (std::isnan(v)) throw DataError("NaN prediction in bucketize");
  const double width = rb.hi - rb.lo;
  if (rb.count == 1 || !(width > 0.0)) return 0;
  if (v <= rb.lo) return 0;
  const double t = (v - rb.lo) / width * static_cast<double>(rb.count);
  auto b = static_cast<std::int64_t>(std::ceil(t)) - 1;
  if (b < 0) b = 0;
  if (b >= rb.count) b = rb.count - 1;
  return static_cast<std::int32_t>(b);
}

std::vector<std::int32_t> bucketize(std::span<const double> f, const ResolvedBuckets& rb) {
  std::vector<std::int32_t> ids(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) ids[i] = bucket_of(f[i], rb);
  return ids;
}

bool directional_member(double v, const ResolvedBuckets& rb, std::int32_t dir_id) {
  if (std::isnan(v)) throw DataError("NaN prediction in bucketize");
  if (dir_id < 0 || dir_id >= 2 * rb.count) throw ConfigError("directional id out of range");
  const std::int32_t l = dir_id / 2 + 1;  // threshold index 1..L
  const double threshold =
      rb.lo + static_cast<double>(l) * (rb.hi - rb.lo) / static_cast<double>(rb.count);
  return (dir_id % 2 == 0) ? v <= threshold : v >= threshold;
}

std::vector<std::pair<CellKey, std::vector<std::int32_t>>> enumerate_cells(
    std::span<const std::int32_t> group_ids, std::int32_t n_groups,
    std::span<const double> f, const ResolvedBuckets& rb) {
  if (group_ids.size() != f.size()) throw DataError("group/prediction length mismatch");
  std::vector<std::pair<CellKey, std::vector<std::int32_t>>> cells;
  if (rb.directional) {
    for (std::int32_t g = 0; g < n_groups; ++g) {
      for (std::int32_t d = 0; d < 2 * rb.count; ++d) {
        std::vector<std::int32_t> rows;
        for (std::size_t i = 0; i < f.size(); ++i)
          if (group_ids[i] == g && directional_member(f[i], rb, d))
            rows.push_back(static_cast<std::int32_t>(i));
        if (!rows.empty()) cells.emplace_back(CellKey{g, d}, std::move(rows));
      }
    }
    return cells;
  }
  std::vector<std::vector<std::int32_t>> bins(
      static_cast<std::size_t>(n_groups) * static_cast<std::size_t>(rb.count));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::int32_t g = group_ids[i];
    if (g < 0 || g >= n_groups) throw DataError("group id out of range");
    const std::int32_t l = bucket_of(f[i], rb);
    bins[static_cast<std::size_t>(g) * static_cast<std::size_t>(rb.count) +
         static_cast<std::size_t>(l)]
        .push_back(static_cast<std::int32_t>(i));
  }
  for (std::int32_t g = 0; g < n_groups; ++g)
    for (std::int32_t l = 0; l < rb.count; ++l) {
      auto& rows = bins[static_cast<std::size_t>(g) * static_cast<std::size_t>(rb.count) +
                        static_cast<std::size_t>(l)];
      if (!rows.empty()) cells.emplace_back(CellKey{g, l}, std::move(rows));
    }
  return cells;
}

double snap_to_grid(double v, std::int32_t L) {
  if (L < 1) throw ConfigError("grid resolution L must be >= 1");
  const double clamped = std::clamp(v, 0.0, 1.0);
  // Nearest grid index; the half-integer boundary rounds down.
  auto k = static_cast<std::int64_t>(std::ceil(clamped * static_cast<double>(L) - 0.5));
  if (k < 0) k = 0;
  if (k > L) k = L;
  return static_cast<double>(k) / static_cast<double>(L);
}

}  // namespace mcboost
