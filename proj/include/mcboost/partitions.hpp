#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mcboost/dataset.hpp"

namespace mcboost {

// Group structure over the categorical block. An empty column list means a
// single all-rows group; otherwise groups are the row-major cross product of
// the named columns' levels.
struct GroupSpec {
  std::vector<std::int32_t> cat_columns;
};

std::int32_t group_count(const GroupSpec& spec, const Dataset& data);
std::vector<std::int32_t> assign_groups(const GroupSpec& spec, const Dataset& data);

// Names of the grouping columns, for schema-checked model replay.
std::vector<std::string> group_column_names(const GroupSpec& spec, const Dataset& data);

enum class BucketAnchor { Static, Dynamic };

struct BucketSpec {
  std::int32_t count = 1;  // L
  bool auto_range = true;  // range = [min, max] of the anchor predictions
  double lo = 0.0;
  double hi = 1.0;
  BucketAnchor anchor = BucketAnchor::Static;
  bool directional = false;
};

// Range resolved against a concrete anchor sample; what updates persist.
struct ResolvedBuckets {
  std::int32_t count = 1;
  double lo = 0.0;
  double hi = 1.0;
  bool directional = false;
};

ResolvedBuckets resolve_buckets(const BucketSpec& spec, std::span<const double> anchor);

// Equal-width intervals, right-closed with the leftmost also left-closed;
// out-of-range values clamp into the boundary buckets. Returns id in [0, L).
std::int32_t bucket_of(double v, const ResolvedBuckets& rb);
std::vector<std::int32_t> bucketize(std::span<const double> f, const ResolvedBuckets& rb);

// Directional (one-sided) buckets: ids in [0, 2L). Even id 2(l-1) is the set
// {f <= lo + l*(hi-lo)/L}; odd id 2(l-1)+1 is {f >= lo + l*(hi-lo)/L}, for
// l = 1..L. The sets overlap, so membership is a per-id test.
bool directional_member(double v, const ResolvedBuckets& rb, std::int32_t dir_id);

struct CellKey {
  std::int32_t group = 0;
  std::int32_t bucket = 0;  // plain bucket id, or directional id
  friend bool operator<(const CellKey& a, const CellKey& b) {
    return a.group != b.group ? a.group < b.group : a.bucket < b.bucket;
  }
  friend bool operator==(const CellKey& a, const CellKey& b) {
    return a.group == b.group && a.bucket == b.bucket;
  }
};

// Nonempty cells of the (group x bucket) grid in ascending (group, bucket)
// order, each with its member row indices. Directional grids enumerate all
// 2L one-sided buckets per group.
std::vector<std::pair<CellKey, std::vector<std::int32_t>>> enumerate_cells(
    std::span<const std::int32_t> group_ids, std::int32_t n_groups,
    std::span<const double> f, const ResolvedBuckets& rb);

// Nearest grid point in {0, 1/L, ..., 1} after clamping v into [0,1];
// exact midpoints round down.
double snap_to_grid(double v, std::int32_t L);

}  // namespace mcboost
