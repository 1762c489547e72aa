#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dusev/cue.hpp"

namespace dusev {

// Node of the fitted regression tree. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;   // mean target of the node's samples
  int n_samples = 0;
  double sse = 0.0;     // sum of squared deviations at the node
  double gain = 0.0;    // SSE reduction achieved by the split (0 for leaves)
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
};

struct SurrogateTree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double predict(const std::array<double, kNumCues>& x) const;
  int depth() const;
};

struct SurrogateFitOptions {
  int max_depth = 4;
  int min_leaf = 20;
};

// Greedy CART on the five cue values: each split maximizes the weighted
// variance reduction over the midpoints of sorted unique feature values.
// Splits stop at max_depth, min_leaf, or zero gain; leaf value is the mean.
SurrogateTree fit_surrogate(const std::vector<std::array<double, kNumCues>>& x,
                            const std::vector<double>& y,
                            const SurrogateFitOptions& options = {});

// R^2 of tree predictions against y; nullopt when y has zero variance.
std::optional<double> surrogate_fidelity(const SurrogateTree& tree,
                                         const std::vector<std::array<double, kNumCues>>& x,
                                         const std::vector<double>& y);

// Per-feature share of total SSE reduction, normalized to sum 1. `valid` is
// false for a single-leaf tree (no splits: the importances are all zero).
std::array<double, kNumCues> mdi_importance(const SurrogateTree& tree, bool* valid = nullptr);

}  // namespace dusev
