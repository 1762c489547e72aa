#include "dusev/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "dusev/error.hpp"

namespace dusev {

namespace {

constexpr int kCoalitions = 1 << kNumCues;  // 32

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// v(S) for every coalition mask: mean prediction over background hybrids.
std::array<double, kCoalitions> coalition_values(const BatchPredictor& predictor,
                                                 const CueTokenSet& instance,
                                                 const std::vector<CueTokenSet>& background) {
  if (background.empty()) throw ValidationError("shapley: background must be non-empty");
  const int nb = static_cast<int>(background.size());
  std::vector<CueTokenSet> hybrids;
  hybrids.reserve(static_cast<std::size_t>(kCoalitions) * nb);
  for (int mask = 0; mask < kCoalitions; ++mask) {
    for (int b = 0; b < nb; ++b) {
      CueTokenSet scene = background[b];
      for (int k = 0; k < kNumCues; ++k) {
        if (mask & (1 << k)) scene.tokens[k] = instance.tokens[k];
      }
      hybrids.push_back(scene);
    }
  }
  const std::vector<double> outputs = predictor(hybrids);
  if (outputs.size() != hybrids.size()) {
    throw ValidationError("shapley: predictor returned wrong output count");
  }
  std::array<double, kCoalitions> values{};
  for (int mask = 0; mask < kCoalitions; ++mask) {
    double sum = 0.0;
    for (int b = 0; b < nb; ++b) sum += outputs[static_cast<std::size_t>(mask) * nb + b];
    values[mask] = sum / nb;
  }
  return values;
}

std::array<double, kNumCues> phi_from_values(const std::array<double, kCoalitions>& v) {
  // weight for a coalition of size s not containing i: s!(n-s-1)!/n!
  std::array<double, kNumCues> weight{};
  for (int s = 0; s < kNumCues; ++s) {
    weight[s] = factorial(s) * factorial(kNumCues - s - 1) / factorial(kNumCues);
  }
  std::array<double, kNumCues> phi{};
  for (int i = 0; i < kNumCues; ++i) {
    double acc = 0.0;
    for (int mask = 0; mask < kCoalitions; ++mask) {
      if (mask & (1 << i)) continue;
      const int size = std::popcount(static_cast<unsigned>(mask));
      acc += weight[size] * (v[mask | (1 << i)] - v[mask]);
    }
    phi[i] = acc;
  }
  return phi;
}

Matrix interactions_from_values(const std::array<double, kCoalitions>& v,
                                const std::array<double, kNumCues>& phi) {
  // pair weight for S of size s excluding both members: s!(n-s-2)!/(n-1)!
  // (sums to 1 over all S, so the full pair interaction lands in each of the
  // two symmetric cells)
  std::array<double, kNumCues - 1> weight{};
  for (int s = 0; s <= kNumCues - 2; ++s) {
    weight[s] = factorial(s) * factorial(kNumCues - s - 2) / factorial(kNumCues - 1);
  }
  Matrix inter(kNumCues, kNumCues);
  for (int i = 0; i < kNumCues; ++i) {
    for (int j = i + 1; j < kNumCues; ++j) {
      double acc = 0.0;
      for (int mask = 0; mask < kCoalitions; ++mask) {
        if (mask & ((1 << i) | (1 << j))) continue;
        const int size = std::popcount(static_cast<unsigned>(mask));
        const double delta = v[mask | (1 << i) | (1 << j)] - v[mask | (1 << i)] -
                             v[mask | (1 << j)] + v[mask];
        acc += weight[size] * delta;
      }
      inter(i, j) = acc;
      inter(j, i) = acc;
    }
  }
  for (int i = 0; i < kNumCues; ++i) {
    double off = 0.0;
    for (int j = 0; j < kNumCues; ++j) {
      if (j != i) off += inter(i, j);
    }
    inter(i, i) = phi[i] - off;
  }
  return inter;
}

// Average ranks (1-based), ties averaged.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&values](int a, int b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Matrix pearson_matrix(const std::vector<std::vector<double>>& cols,
                      const std::array<bool, 6>& defined) {
  const int m = static_cast<int>(cols.size());
  const int n = static_cast<int>(cols[0].size());
  std::vector<double> mean(m, 0.0), stddev(m, 0.0);
  for (int c = 0; c < m; ++c) {
    for (double x : cols[c]) mean[c] += x;
    mean[c] /= n;
    double var = 0.0;
    for (double x : cols[c]) var += (x - mean[c]) * (x - mean[c]);
    stddev[c] = std::sqrt(var / n);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Matrix out(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      double r;
      if (!defined[a] || !defined[b]) {
        r = nan;
      } else if (a == b) {
        r = 1.0;
      } else {
        double cov = 0.0;
        for (int i = 0; i < n; ++i) cov += (cols[a][i] - mean[a]) * (cols[b][i] - mean[b]);
        cov /= n;
        r = cov / (stddev[a] * stddev[b]);
      }
      out(a, b) = r;
      out(b, a) = r;
    }
  }
  return out;
}

}  // namespace

CorrelationMatrices compute_correlations(const std::vector<std::array<double, 6>>& columns) {
  const int n = static_cast<int>(columns.size());
  if (n < 3) throw ValidationError("compute_correlations: need at least 3 samples");
  std::vector<std::vector<double>> cols(6, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 6; ++c) {
      const double x = columns[i][c];
      if (!std::isfinite(x)) {
        throw ValidationError("compute_correlations: non-finite value in column " +
                              std::to_string(c));
      }
      cols[c][i] = x;
    }
  }

  CorrelationMatrices result;
  for (int k = 0; k < kNumCues; ++k) {
    result.labels.emplace_back("nm_" + std::string(cue_short(static_cast<CueKind>(k))));
  }
  result.labels.emplace_back("risk");

  int n_defined = 0;
  for (int c = 0; c < 6; ++c) {
    const double first = cols[c][0];
    bool varies = false;
    for (double x : cols[c]) {
      if (x != first) {
        varies = true;
        break;
      }
    }
    result.column_defined[c] = varies;
    if (varies) ++n_defined;
  }
  if (n_defined == 0) {
    throw ValidationError("compute_correlations: all columns are constant");
  }

  result.pearson = pearson_matrix(cols, result.column_defined);
  std::vector<std::vector<double>> ranked(6);
  for (int c = 0; c < 6; ++c) ranked[c] = average_ranks(cols[c]);
  result.spearman = pearson_matrix(ranked, result.column_defined);
  return result;
}

ShapleyResult shapley_values(const BatchPredictor& predictor, const CueTokenSet& instance,
                             const std::vector<CueTokenSet>& background) {
  const auto values = coalition_values(predictor, instance, background);
  ShapleyResult result;
  result.base_value = values[0];
  result.phi = phi_from_values(values);
  return result;
}

AttributionReport explain_instance(const BatchPredictor& predictor, const CueTokenSet& instance,
                                   const std::vector<CueTokenSet>& background,
                                   const std::string& instance_id) {
  const auto values = coalition_values(predictor, instance, background);
  AttributionReport report;
  report.instance_id = instance_id;
  report.base_value = values[0];
  report.model_output = values[kCoalitions - 1];
  report.phi = phi_from_values(values);
  report.interaction = interactions_from_values(values, report.phi);
  report.background_size = static_cast<int>(background.size());
  return report;
}

Matrix shapley_interactions(const BatchPredictor& predictor, const CueTokenSet& instance,
                            const std::vector<CueTokenSet>& background) {
  const auto values = coalition_values(predictor, instance, background);
  return interactions_from_values(values, phi_from_values(values));
}

std::array<double, kNumCues> global_importance(const std::vector<AttributionReport>& reports) {
  if (reports.empty()) throw ValidationError("global_importance: empty explanation set");
  std::array<double, kNumCues> mean_abs{};
  for (const auto& report : reports) {
    for (int k = 0; k < kNumCues; ++k) mean_abs[k] += std::abs(report.phi[k]);
  }
  double total = 0.0;
  for (int k = 0; k < kNumCues; ++k) {
    mean_abs[k] /= reports.size();
    total += mean_abs[k];
  }
  if (total > 0.0) {
    for (double& w : mean_abs) w = 100.0 * w / total;
  }
  return mean_abs;
}

Matrix mean_abs_interaction(const std::vector<AttributionReport>& reports) {
  if (reports.empty()) throw ValidationError("mean_abs_interaction: empty explanation set");
  Matrix mean(kNumCues, kNumCues);
  for (const auto& report : reports) {
    for (int i = 0; i < kNumCues; ++i) {
      for (int j = 0; j < kNumCues; ++j) mean(i, j) += std::abs(report.interaction(i, j));
    }
  }
  scale_inplace(mean, 1.0 / static_cast<double>(reports.size()));
  return mean;
}

SynergyGraph build_synergy_graph(const std::array<double, kNumCues>& importance_percent,
                                 const Matrix& interaction_strength) {
  if (interaction_strength.rows() != kNumCues || interaction_strength.cols() != kNumCues) {
    throw ShapeError("build_synergy_graph: interaction matrix must be 5x5, got " +
                     interaction_strength.shape_str());
  }
  SynergyGraph graph;
  double total = 0.0;
  for (double w : importance_percent) {
    if (w < 0.0) throw ValidationError("build_synergy_graph: negative importance");
    total += w;
  }
  for (int k = 0; k < kNumCues; ++k) {
    graph.node_weight[k] = total > 0.0 ? importance_percent[k] / total : 1.0 / kNumCues;
  }
  for (int a = 0; a < kNumCues; ++a) {
    for (int b = a + 1; b < kNumCues; ++b) {
      graph.edges.push_back({a, b, interaction_strength(a, b), false});
    }
  }
  std::vector<int> order(graph.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&graph](int lhs, int rhs) {
    return graph.edges[lhs].strength > graph.edges[rhs].strength;
  });
  for (int r = 0; r < 3 && r < static_cast<int>(order.size()); ++r) {
    graph.edges[order[r]].top3 = true;
  }
  return graph;
}

std::string synergy_to_dot(const SynergyGraph& graph) {
  char buf[160];
  std::string dot = "graph synergy {\n  node [shape=circle];\n";
  for (int k = 0; k < kNumCues; ++k) {
    const auto kind = static_cast<CueKind>(k);
    std::snprintf(buf, sizeof(buf), "  %s [label=\"%s\", width=%.6f];\n",
                  std::string(cue_short(kind)).c_str(), std::string(cue_name(kind)).c_str(),
                  0.5 + 2.0 * graph.node_weight[k]);
    dot += buf;
  }
  for (const auto& edge : graph.edges) {
    const auto a = static_cast<CueKind>(edge.a);
    const auto b = static_cast<CueKind>(edge.b);
    std::snprintf(buf, sizeof(buf), "  %s -- %s [penwidth=%.6f, color=%s];\n",
                  std::string(cue_short(a)).c_str(), std::string(cue_short(b)).c_str(),
                  0.5 + 10.0 * edge.strength, edge.top3 ? "red" : "gray");
    dot += buf;
  }
  dot += "}\n";
  return dot;
}

std::vector<DependenceRow> dependence_grid(const std::vector<AttributionReport>& reports,
                                           const std::vector<CueTokenSet>& instances, int feature,
                                           int color_feature) {
  if (feature < 0 || feature >= kNumCues || color_feature < 0 || color_feature >= kNumCues) {
    throw DomainError("dependence_grid: feature index out of range");
  }
  if (reports.size() != instances.size()) {
    throw ValidationError("dependence_grid: reports/instances size mismatch");
  }
  std::vector<DependenceRow> rows;
  rows.reserve(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    rows.push_back({instances[i].tokens[feature].v, reports[i].phi[feature],
                    instances[i].tokens[color_feature].v});
  }
  return rows;
}

std::vector<SurfaceRow> surface_grid(const BatchPredictor& predictor, int feature_a, int feature_b,
                                     const std::vector<CueTokenSet>& background) {
  if (feature_a < 0 || feature_a >= kNumCues || feature_b < 0 || feature_b >= kNumCues ||
      feature_a == feature_b) {
    throw DomainError("surface_grid: invalid feature pair");
  }
  if (background.empty()) throw ValidationError("surface_grid: background must be non-empty");

  auto median_of = [](std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  };
  CueTokenSet base;
  for (int k = 0; k < kNumCues; ++k) {
    std::vector<double> vs, cs;
    vs.reserve(background.size());
    cs.reserve(background.size());
    for (const auto& scene : background) {
      vs.push_back(scene.tokens[k].v);
      cs.push_back(scene.tokens[k].c);
    }
    base.tokens[k].v = median_of(std::move(vs));
    base.tokens[k].c = median_of(std::move(cs));
  }

  constexpr int kGridSide = 41;
  std::vector<CueTokenSet> scenes;
  scenes.reserve(kGridSide * kGridSide);
  for (int ia = 0; ia < kGridSide; ++ia) {
    for (int ib = 0; ib < kGridSide; ++ib) {
      CueTokenSet scene = base;
      scene.tokens[feature_a] = {static_cast<double>(ia) / (kGridSide - 1), 1.0};
      scene.tokens[feature_b] = {static_cast<double>(ib) / (kGridSide - 1), 1.0};
      scenes.push_back(scene);
    }
  }
  const std::vector<double> scores = predictor(scenes);
  if (scores.size() != scenes.size()) {
    throw ValidationError("surface_grid: predictor returned wrong output count");
  }
  std::vector<SurfaceRow> rows;
  rows.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    rows.push_back({scenes[i].tokens[feature_a].v, scenes[i].tokens[feature_b].v, scores[i]});
  }
  return rows;
}

}  // namespace dusev
