#include "dusev/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dusev/error.hpp"
#include "dusev/rng.hpp"

namespace dusev {

namespace {

PerturbationReport make_report(std::string condition, const Metrics& baseline,
                               const Metrics& perturbed) {
  PerturbationReport report;
  report.condition = std::move(condition);
  report.baseline = baseline;
  report.perturbed = perturbed;
  report.delta_mae = perturbed.mae - baseline.mae;
  report.delta_rmse = perturbed.rmse - baseline.rmse;
  report.delta_r2 = perturbed.r2 - baseline.r2;
  return report;
}

Metrics metrics_for(const BatchPredictor& predictor, const std::vector<CueTokenSet>& tokens,
                    const std::vector<double>& labels) {
  return compute_metrics(predictor(tokens), labels);
}

}  // namespace

std::vector<PerturbationReport> noise_sweep(const BatchPredictor& predictor,
                                            const std::vector<CueTokenSet>& test_tokens,
                                            const std::vector<double>& labels,
                                            const std::vector<double>& sigmas,
                                            std::uint64_t seed) {
  if (test_tokens.size() != labels.size() || test_tokens.empty()) {
    throw ValidationError("noise_sweep: token/label lengths must match and be non-zero");
  }
  const Metrics baseline = metrics_for(predictor, test_tokens, labels);

  std::vector<PerturbationReport> reports;
  reports.reserve(sigmas.size());
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    const double sigma = sigmas[s];
    if (sigma < 0.0) throw DomainError("noise_sweep: sigma must be >= 0");
    // independent stream per condition so conditions can be reordered
    Rng rng(SplitMix64(seed + s).next());
    std::vector<CueTokenSet> noisy = test_tokens;
    if (sigma > 0.0) {
      for (auto& scene : noisy) {
        for (auto& token : scene.tokens) {
          token.v = std::clamp(token.v + rng.normal(0.0, sigma), 0.0, 1.0);
          token.c = std::clamp(token.c + rng.normal(0.0, sigma), 0.0, 1.0);
        }
      }
    }
    const Metrics perturbed =
        sigma > 0.0 ? metrics_for(predictor, noisy, labels) : baseline;
    char name[48];
    std::snprintf(name, sizeof(name), "noise_sigma_%.3f", sigma);
    reports.push_back(make_report(name, baseline, perturbed));
  }
  return reports;
}

PerturbationReport ablate_modality(const BatchPredictor& predictor,
                                   const std::vector<CueTokenSet>& test_tokens,
                                   const std::vector<double>& labels, int cue,
                                   const std::vector<CueTokenSet>& background) {
  if (cue < 0 || cue >= kNumCues) throw DomainError("ablate_modality: cue index out of range");
  if (background.empty()) throw ValidationError("ablate_modality: background must be non-empty");
  if (test_tokens.size() != labels.size() || test_tokens.empty()) {
    throw ValidationError("ablate_modality: token/label lengths must match and be non-zero");
  }
  CueToken mean_token;
  for (const auto& scene : background) {
    mean_token.v += scene.tokens[cue].v;
    mean_token.c += scene.tokens[cue].c;
  }
  mean_token.v /= background.size();
  mean_token.c /= background.size();

  std::vector<CueTokenSet> ablated = test_tokens;
  for (auto& scene : ablated) scene.tokens[cue] = mean_token;

  const Metrics baseline = metrics_for(predictor, test_tokens, labels);
  const Metrics perturbed = metrics_for(predictor, ablated, labels);
  return make_report("ablate_" + std::string(cue_name(static_cast<CueKind>(cue))), baseline,
                     perturbed);
}

PerturbationReport jitter(const BatchPredictor& predictor, const Dataset& test_set,
                          const NormalizationCaps& caps, std::uint64_t seed,
                          double rel_perturbation) {
  if (test_set.empty()) throw ValidationError("jitter: empty test set");
  if (rel_perturbation < 0.0) throw DomainError("jitter: perturbation must be >= 0");

  std::vector<CueTokenSet> clean, neighbor;
  std::vector<double> labels;
  clean.reserve(test_set.size());
  neighbor.reserve(test_set.size());
  labels.reserve(test_set.size());
  Rng rng(seed);
  for (const auto& obs : test_set) {
    if (!obs.label) throw ValidationError("jitter: scene '" + obs.scene_id + "' has no label");
    labels.push_back(*obs.label);
    clean.push_back(tokenize(obs, caps));

    RawSceneObservation shifted = obs;
    for (int k = 0; k < kNumCues; ++k) {
      const double delta = obs.counts[k] * rng.uniform(-rel_perturbation, rel_perturbation);
      const int count = std::max(0, static_cast<int>(std::llround(obs.counts[k] + delta)));
      shifted.counts[k] = count;
      if (count == 0) shifted.confidences[k] = 0.0;
    }
    neighbor.push_back(tokenize(shifted, caps));
  }

  const Metrics baseline = compute_metrics(predictor(clean), labels);
  const Metrics perturbed = compute_metrics(predictor(neighbor), labels);
  return make_report("jitter_neighbor", baseline, perturbed);
}

}  // namespace dusev
