#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcboost/dataset.hpp"
#include "mcboost/rng.hpp"

namespace mcboost {

// One node of an axis-aligned regression tree. Continuous splits send
// x <= threshold left; categorical splits are one-vs-rest on the level code
// stored in threshold (code == threshold goes left). feature == -1 is a leaf.
struct TreeNode {
  std::int32_t feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

// Feature indices: [0, d_cont) are continuous columns, [d_cont, d_cont+d_cat)
// are categorical columns (when included).
struct CartParams {
  std::int32_t max_depth = 3;
  std::int32_t min_leaf = 5;
  bool include_categorical = true;
  std::int32_t mtry = 0;  // 0 = consider every feature at every node
};

struct CartResult {
  std::vector<TreeNode> nodes;
  // Sorted target samples per leaf node id (empty for internal nodes);
  // filled only when requested, for quantile-forest leaves.
  std::vector<std::vector<double>> leaf_samples;
};

// Greedy CART on squared-error reduction. Deterministic: features scanned in
// ascending index order, thresholds ascending, strictly better gain required,
// so equal-gain ties resolve to the lowest feature then smallest threshold.
// rng is consulted only when mtry narrows the per-node feature set.
CartResult build_cart(const Dataset& data, std::span<const double> targets,
                      std::span<const std::int32_t> rows, const CartParams& params,
                      Rng* rng = nullptr, bool keep_leaf_samples = false);

double eval_tree(std::span<const TreeNode> nodes, const Dataset& data, std::size_t row);

// Leaf node id reached by a row (for pooled quantile lookups).
std::int32_t tree_leaf(std::span<const TreeNode> nodes, const Dataset& data, std::size_t row);

std::int32_t tree_depth(std::span<const TreeNode> nodes);

}  // namespace mcboost
