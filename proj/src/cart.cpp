#include "mcboost/cart.hpp"

#include <algorithm>
#include <cmath>

#include "mcboost/common.hpp"

namespace mcboost {

namespace {

struct Split {
  bool found = false;
  std::int32_t feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  double gain = 0.0;
};

struct Builder {
  const Dataset& data;
  std::span<const double> targets;
  const CartParams& params;
  Rng* rng;
  bool keep_leaf_samples;
  CartResult out;
  std::vector<std::int32_t> feature_pool;      // full universe, ascending
  std::vector<std::int32_t> feature_scratch;   // per-node mtry sample

  Builder(const Dataset& d, std::span<const double> t, const CartParams& p, Rng* r, bool keep)
      : data(d), targets(t), params(p), rng(r), keep_leaf_samples(keep) {
    const auto d_total = static_cast<std::int32_t>(
        data.d_cont() + (params.include_categorical ? data.d_cat() : 0));
    feature_pool.resize(static_cast<std::size_t>(d_total));
    for (std::int32_t j = 0; j < d_total; ++j) feature_pool[static_cast<std::size_t>(j)] = j;
  }

  // Features scanned at this node, ascending so tie-breaks stay deterministic.
  std::span<const std::int32_t> node_features() {
    const auto d_total = static_cast<std::int32_t>(feature_pool.size());
    if (params.mtry <= 0 || params.mtry >= d_total || rng == nullptr) return feature_pool;
    feature_scratch = feature_pool;
    for (std::int32_t i = 0; i < params.mtry; ++i) {
      const auto j = i + static_cast<std::int32_t>(
                             rng->next_below(static_cast<std::uint64_t>(d_total - i)));
      std::swap(feature_scratch[static_cast<std::size_t>(i)],
                feature_scratch[static_cast<std::size_t>(j)]);
    }
    feature_scratch.resize(static_cast<std::size_t>(params.mtry));
    std::sort(feature_scratch.begin(), feature_scratch.end());
    return feature_scratch;
  }

  Split best_split(std::span<const std::int32_t> rows, double node_sum, double node_sumsq) {
    const auto n = static_cast<double>(rows.size());
    const double sse_parent = std::max(0.0, node_sumsq - node_sum * node_sum / n);
    Split best;
    if (sse_parent <= 0.0) return best;
    const double min_gain = sse_parent * 1e-12;
    const auto min_leaf = static_cast<std::size_t>(params.min_leaf);

    std::vector<std::pair<double, double>> vals;  // (feature value, target)
    for (std::int32_t feature : node_features()) {
      if (static_cast<std::size_t>(feature) < data.d_cont()) {
        const auto j = static_cast<std::size_t>(feature);
        vals.clear();
        vals.reserve(rows.size());
        for (std::int32_t r : rows)
          vals.emplace_back(data.cont(static_cast<std::size_t>(r), j),
                            targets[static_cast<std::size_t>(r)]);
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double sum_l = 0.0, sumsq_l = 0.0;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
          sum_l += vals[k].second;
          sumsq_l += vals[k].second * vals[k].second;
          if (vals[k].first == vals[k + 1].first) continue;
          const std::size_t n_l = k + 1, n_r = vals.size() - n_l;
          if (n_l < min_leaf || n_r < min_leaf) continue;
          const double sum_r = node_sum - sum_l, sumsq_r = node_sumsq - sumsq_l;
          const double sse_l = sumsq_l - sum_l * sum_l / static_cast<double>(n_l);
          const double sse_r = sumsq_r - sum_r * sum_r / static_cast<double>(n_r);
          const double gain = sse_parent - sse_l - sse_r;
          if (gain > best.gain && gain > min_gain) {
            double thr = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
            // Midpoint must stay strictly below the right block's value.
            if (!(thr < vals[k + 1].first)) thr = vals[k].first;
            best = {true, feature, false, thr, gain};
          }
        }
      } else {
        const auto c = static_cast<std::size_t>(feature) - data.d_cont();
        const auto n_levels = static_cast<std::size_t>(data.cat_cardinality(c));
        std::vector<double> lvl_sum(n_levels, 0.0), lvl_sumsq(n_levels, 0.0);
        std::vector<std::size_t> lvl_n(n_levels, 0);
        for (std::int32_t r : rows) {
          const auto code = static_cast<std::size_t>(data.cat(static_cast<std::size_t>(r), c));
          const double t = targets[static_cast<std::size_t>(r)];
          lvl_sum[code] += t;
          lvl_sumsq[code] += t * t;
          lvl_n[code] += 1;
        }
        for (std::size_t code = 0; code < n_levels; ++code) {
          const std::size_t n_l = lvl_n[code], n_r = rows.size() - n_l;
          if (n_l < min_leaf || n_r < min_leaf) continue;
          const double sum_r = node_sum - lvl_sum[code];
          const double sumsq_r = node_sumsq - lvl_sumsq[code];
          const double sse_l =
              lvl_sumsq[code] - lvl_sum[code] * lvl_sum[code] / static_cast<double>(n_l);
          const double sse_r = sumsq_r - sum_r * sum_r / static_cast<double>(n_r);
          const double gain = sse_parent - sse_l - sse_r;
          if (gain > best.gain && gain > min_gain)
            best = {true, feature, true, static_cast<double>(code), gain};
        }
      }
    }
    return best;
  }

  std::int32_t build(std::vector<std::int32_t> rows, std::int32_t depth) {
    double sum = 0.0, sumsq = 0.0;
    for (std::int32_t r : rows) {
      const double t = targets[static_cast<std::size_t>(r)];
      sum += t;
      sumsq += t * t;
    }
    const auto id = static_cast<std::int32_t>(out.nodes.size());
    out.nodes.emplace_back();
    out.nodes.back().value = sum / static_cast<double>(rows.size());
    if (keep_leaf_samples) out.leaf_samples.emplace_back();

    Split split;
    if (depth < params.max_depth &&
        rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf))
      split = best_split(rows, sum, sumsq);
    if (!split.found) {
      if (keep_leaf_samples) {
        auto& samples = out.leaf_samples[static_cast<std::size_t>(id)];
        samples.reserve(rows.size());
        for (std::int32_t r : rows) samples.push_back(targets[static_cast<std::size_t>(r)]);
        std::sort(samples.begin(), samples.end());
      }
      return id;
    }

    std::vector<std::int32_t> left_rows, right_rows;
    for (std::int32_t r : rows) {
      const auto i = static_cast<std::size_t>(r);
      bool goes_left;
      if (split.categorical) {
        const auto c = static_cast<std::size_t>(split.feature) - data.d_cont();
        goes_left = static_cast<double>(data.cat(i, c)) == split.threshold;
      } else {
        goes_left = data.cont(i, static_cast<std::size_t>(split.feature)) <= split.threshold;
      }
      (goes_left ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    out.nodes[static_cast<std::size_t>(id)].feature = split.feature;
    out.nodes[static_cast<std::size_t>(id)].categorical = split.categorical;
    out.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
    const std::int32_t left = build(std::move(left_rows), depth + 1);
    out.nodes[static_cast<std::size_t>(id)].left = left;
    const std::int32_t right = build(std::move(right_rows), depth + 1);
    out.nodes[static_cast<std::size_t>(id)].right = right;
    return id;
  }
};

}  // namespace

CartResult build_cart(const Dataset& data, std::span<const double> targets,
                      std::span<const std::int32_t> rows, const CartParams& params,
                      Rng* rng, bool keep_leaf_samples) {
  if (rows.empty()) throw DataError("cart: empty row set");
  if (targets.size() != data.n()) throw DataError("cart: target length mismatch");
  if (params.max_depth < 0 || params.min_leaf < 1) throw ConfigError("invalid tree parameters");
  Builder builder(data, targets, params, rng, keep_leaf_samples);
  builder.build(std::vector<std::int32_t>(rows.begin(), rows.end()), 0);
  return std::move(builder.out);
}

double eval_tree(std::span<const TreeNode> nodes, const Dataset& data, std::size_t row) {
  return nodes[static_cast<std::size_t>(tree_leaf(nodes, data, row))].value;
}

std::int32_t tree_leaf(std::span<const TreeNode> nodes, const Dataset& data, std::size_t row) {
  std::int32_t id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    bool goes_left;
    if (node.categorical) {
      const auto c = static_cast<std::size_t>(node.feature) - data.d_cont();
      goes_left = static_cast<double>(data.cat(row, c)) == node.threshold;
    } else {
      goes_left = data.cont(row, static_cast<std::size_t>(node.feature)) <= node.threshold;
    }
    id = goes_left ? node.left : node.right;
  }
  return id;
}

std::int32_t tree_depth(std::span<const TreeNode> nodes) {
  // Iterative depth over the node array; children always follow parents.
  std::vector<std::int32_t> depth(nodes.size(), 0);
  std::int32_t max_depth = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    max_depth = std::max(max_depth, depth[i] + 1);
  }
  return max_depth;
}

}  // namespace mcboost
