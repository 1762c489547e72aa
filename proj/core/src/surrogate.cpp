#include "dusev/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dusev/error.hpp"

namespace dusev {

namespace {

double subset_sse(const std::vector<double>& y, const std::vector<int>& idx) {
  double mean = 0.0;
  for (int i : idx) mean += y[i];
  mean /= idx.size();
  double sse = 0.0;
  for (int i : idx) {
    const double d = y[i] - mean;
    sse += d * d;
  }
  return sse;
}

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  double sse_left = 0.0;
  double sse_right = 0.0;
};

// Exhaustive best split: every feature, every midpoint of consecutive sorted
// unique values, subject to min_leaf on both sides.
BestSplit find_best_split(const std::vector<std::array<double, kNumCues>>& x,
                          const std::vector<double>& y, const std::vector<int>& idx,
                          double node_sse, int min_leaf) {
  BestSplit best;
  const int n = static_cast<int>(idx.size());
  std::vector<int> sorted(idx);
  for (int f = 0; f < kNumCues; ++f) {
    std::sort(sorted.begin(), sorted.end(),
              [&x, f](int a, int b) { return x[a][f] < x[b][f]; });
    // prefix sums over the sorted order
    std::vector<double> prefix_sum(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      const double v = y[sorted[i]];
      prefix_sum[i + 1] = prefix_sum[i] + v;
      prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    for (int i = 0; i + 1 < n; ++i) {
      const double a = x[sorted[i]][f];
      const double b = x[sorted[i + 1]][f];
      if (a == b) continue;  // not a boundary between unique values
      const int n_left = i + 1;
      const int n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double sum_l = prefix_sum[n_left];
      const double sq_l = prefix_sq[n_left];
      const double sse_l = sq_l - sum_l * sum_l / n_left;
      const double sum_r = prefix_sum[n] - sum_l;
      const double sq_r = prefix_sq[n] - sq_l;
      const double sse_r = sq_r - sum_r * sum_r / n_right;
      const double gain = node_sse - sse_l - sse_r;
      if (gain > best.gain) {
        best.feature = f;
        best.threshold = 0.5 * (a + b);
        best.gain = gain;
        best.sse_left = std::max(0.0, sse_l);
        best.sse_right = std::max(0.0, sse_r);
      }
    }
  }
  return best;
}

int build_node(const std::vector<std::array<double, kNumCues>>& x, const std::vector<double>& y,
               std::vector<int> idx, double node_sse, int depth,
               const SurrogateFitOptions& options, std::vector<TreeNode>& nodes) {
  TreeNode node;
  node.depth = depth;
  node.n_samples = static_cast<int>(idx.size());
  double mean = 0.0;
  for (int i : idx) mean += y[i];
  node.value = mean / idx.size();
  node.sse = node_sse;

  const int self = static_cast<int>(nodes.size());
  nodes.push_back(node);

  if (depth >= options.max_depth || node.n_samples < 2 * options.min_leaf) return self;
  const BestSplit split = find_best_split(x, y, idx, node_sse, options.min_leaf);
  if (split.feature < 0 || !(split.gain > 0.0)) return self;

  std::vector<int> left_idx, right_idx;
  left_idx.reserve(idx.size());
  right_idx.reserve(idx.size());
  for (int i : idx) {
    if (x[i][split.feature] <= split.threshold) {
      left_idx.push_back(i);
    } else {
      right_idx.push_back(i);
    }
  }
  idx.clear();
  idx.shrink_to_fit();

  nodes[self].feature = split.feature;
  nodes[self].threshold = split.threshold;
  nodes[self].gain = split.gain;
  const int left =
      build_node(x, y, std::move(left_idx), split.sse_left, depth + 1, options, nodes);
  nodes[self].left = left;
  const int right =
      build_node(x, y, std::move(right_idx), split.sse_right, depth + 1, options, nodes);
  nodes[self].right = right;
  return self;
}

}  // namespace

double SurrogateTree::predict(const std::array<double, kNumCues>& x) const {
  int cur = 0;
  while (!nodes[cur].is_leaf()) {
    cur = x[nodes[cur].feature] <= nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
  }
  return nodes[cur].value;
}

int SurrogateTree::depth() const {
  int d = 0;
  for (const auto& node : nodes) d = std::max(d, node.depth);
  return d;
}

SurrogateTree fit_surrogate(const std::vector<std::array<double, kNumCues>>& x,
                            const std::vector<double>& y, const SurrogateFitOptions& options) {
  if (x.empty() || x.size() != y.size()) {
    throw ValidationError("fit_surrogate: x/y lengths must match and be non-zero");
  }
  if (options.max_depth < 0 || options.min_leaf < 1) {
    throw ConfigError("fit_surrogate: invalid options");
  }
  std::vector<int> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  const double root_sse = subset_sse(y, idx);
  SurrogateTree tree;
  build_node(x, y, std::move(idx), root_sse, 0, options, tree.nodes);
  return tree;
}

std::optional<double> surrogate_fidelity(const SurrogateTree& tree,
                                         const std::vector<std::array<double, kNumCues>>& x,
                                         const std::vector<double>& y) {
  if (x.empty() || x.size() != y.size()) {
    throw ValidationError("surrogate_fidelity: x/y lengths must match and be non-zero");
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= y.size();
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = tree.predict(x[i]);
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0)) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

std::array<double, kNumCues> mdi_importance(const SurrogateTree& tree, bool* valid) {
  std::array<double, kNumCues> importance{};
  double total = 0.0;
  for (const auto& node : tree.nodes) {
    if (!node.is_leaf()) {
      importance[node.feature] += node.gain;
      total += node.gain;
    }
  }
  if (total > 0.0) {
    for (double& w : importance) w /= total;
    if (valid) *valid = true;
  } else {
    if (valid) *valid = false;
  }
  return importance;
}

}  // namespace dusev
