#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dusev/cue.hpp"
#include "dusev/explain.hpp"
#include "dusev/metrics.hpp"
#include "dusev/synthetic.hpp"

namespace dusev {

// One perturbation condition compared against the clean baseline on the same
// test set. Deltas are perturbed minus baseline, exactly.
struct PerturbationReport {
  std::string condition;
  Metrics baseline;
  Metrics perturbed;
  double delta_mae = 0.0;
  double delta_rmse = 0.0;
  double delta_r2 = 0.0;
};

// Gaussian noise on every token component (v and c), clamped to [0,1], one
// report per sigma. A sigma of 0 reproduces the baseline exactly.
std::vector<PerturbationReport> noise_sweep(const BatchPredictor& predictor,
                                            const std::vector<CueTokenSet>& test_tokens,
                                            const std::vector<double>& labels,
                                            const std::vector<double>& sigmas, std::uint64_t seed);

// Replace cue k's token with the background-mean token on every test scene.
PerturbationReport ablate_modality(const BatchPredictor& predictor,
                                   const std::vector<CueTokenSet>& test_tokens,
                                   const std::vector<double>& labels, int cue,
                                   const std::vector<CueTokenSet>& background);

// Score each scene with a "neighbor" variant whose counts were resampled
// within +/- rel_perturbation relative error, against the scene's own label.
PerturbationReport jitter(const BatchPredictor& predictor, const Dataset& test_set,
                          const NormalizationCaps& caps, std::uint64_t seed,
                          double rel_perturbation = 0.10);

}  // namespace dusev
