#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dusev/cue.hpp"
#include "dusev/matrix.hpp"

namespace dusev {

// Black-box scorer used by every explainer: token sets in, scores out, in
// order. Explainers never see model internals, so any eval-mode predictor
// (or a hand-built function in tests) plugs in.
using BatchPredictor = std::function<std::vector<double>(const std::vector<CueTokenSet>&)>;

// ---------------------------------------------------------------------------
// correlations

// 6x6 matrices over the five cue values plus the target column (model
// predictions or labels). Entries touching a zero-variance column are NaN and
// flagged via column_defined.
struct CorrelationMatrices {
  Matrix pearson{6, 6};
  Matrix spearman{6, 6};
  std::array<bool, 6> column_defined{};
  std::vector<std::string> labels;  // column names, cue order then "risk"
};

// `columns` is sample-major: columns[i] = {v_p, v_em, v_wp, v_f, v_bl, target}.
// Throws ValidationError for fewer than 3 samples or an all-constant dataset.
CorrelationMatrices compute_correlations(const std::vector<std::array<double, 6>>& columns);

// ---------------------------------------------------------------------------
// exact Shapley attribution

// Interventional coalition value: v(S) averages the predictor over hybrids
// taking whole (v, c) tokens from the instance for cues in S and from each
// background scene otherwise. All 32 coalitions are enumerated, so the
// Shapley axioms hold to numerical precision.
struct ShapleyResult {
  std::array<double, kNumCues> phi{};
  double base_value = 0.0;  // v(empty) = mean prediction over the background
};

ShapleyResult shapley_values(const BatchPredictor& predictor, const CueTokenSet& instance,
                             const std::vector<CueTokenSet>& background);

// Pairwise interaction matrix. Off-diagonal entries hold the full interaction
// of the unordered pair, symmetric by construction; the diagonal is defined
// as phi_i minus the off-diagonal row sum so that the matrix total equals
// model output minus base value.
struct AttributionReport {
  std::string instance_id;
  double base_value = 0.0;
  double model_output = 0.0;
  std::array<double, kNumCues> phi{};
  Matrix interaction{kNumCues, kNumCues};
  int background_size = 0;
};

AttributionReport explain_instance(const BatchPredictor& predictor, const CueTokenSet& instance,
                                   const std::vector<CueTokenSet>& background,
                                   const std::string& instance_id = {});

Matrix shapley_interactions(const BatchPredictor& predictor, const CueTokenSet& instance,
                            const std::vector<CueTokenSet>& background);

// Mean |phi| per cue over an explanation set, normalized to percent (sums to
// 100 unless every phi is exactly zero).
std::array<double, kNumCues> global_importance(const std::vector<AttributionReport>& reports);

// Entry-wise mean of |interaction| over an explanation set.
Matrix mean_abs_interaction(const std::vector<AttributionReport>& reports);

// ---------------------------------------------------------------------------
// synergy graph

struct SynergyEdge {
  int a = 0;
  int b = 0;
  double strength = 0.0;
  bool top3 = false;
};

struct SynergyGraph {
  std::array<double, kNumCues> node_weight{};  // normalized importances, sum 1
  std::vector<SynergyEdge> edges;              // all 10 pairs, canonical order
};

// Node weight = importance percent / 100; edge strength = mean |interaction|.
// Exactly the three strongest edges are flagged, ties broken by canonical
// pair order.
SynergyGraph build_synergy_graph(const std::array<double, kNumCues>& importance_percent,
                                 const Matrix& mean_abs_interaction);

std::string synergy_to_dot(const SynergyGraph& graph);

// ---------------------------------------------------------------------------
// dependence and surface grids

struct DependenceRow {
  double v_feature = 0.0;
  double phi_feature = 0.0;
  double v_color = 0.0;
};

// One row per explained instance: (v_j, phi_j, v_k).
std::vector<DependenceRow> dependence_grid(const std::vector<AttributionReport>& reports,
                                           const std::vector<CueTokenSet>& instances, int feature,
                                           int color_feature);

struct SurfaceRow {
  double v_a = 0.0;
  double v_b = 0.0;
  double score = 0.0;
};

// 41x41 sweep of (v_a, v_b) over [0,1]^2 with the swept cues' confidences at
// 1.0 and every other cue fixed at its background median (v and c).
std::vector<SurfaceRow> surface_grid(const BatchPredictor& predictor, int feature_a, int feature_b,
                                     const std::vector<CueTokenSet>& background);

}  // namespace dusev
