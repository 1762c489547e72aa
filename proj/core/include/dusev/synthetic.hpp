#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dusev/cue.hpp"
#include "dusev/rng.hpp"

namespace dusev {

using Dataset = std::vector<RawSceneObservation>;

// Controls the synthetic scene sampler and the label noise.
struct GeneratorConfig {
  int n_scenes = 10000;
  std::uint64_t seed = 42;
  double p_weapon = 0.15;
  double p_fire = 0.05;
  double person_rate = 8.0;
  double em_rate = 0.10;
  double bl_rate = 0.08;
  double label_noise_sigma = 0.15;
  NormalizationCaps caps;

  void validate() const;
};

// Coefficients of the labeling oracle, applied to normalized cue values.
// Main effects rank weapon > fire > body language > emotion > person; the
// three interaction terms couple weapon-emotion, weapon-body-language, and
// emotion-fire.
struct OracleCoefficients {
  double base = 1.5;
  double wp = 3.0;
  double fire = 2.0;
  double bl = 1.8;
  double em = 1.0;
  double p = 0.5;
  double wp_em = 2.5;
  double wp_bl = 2.0;
  double em_fire = 1.2;
};

// Draw one unlabeled scene. Person count is capped Poisson; weapons and fire
// are rare Bernoulli events; suspicious emotions and abnormal body language
// are Binomial in the person count; confidences are U(0.6, 1) where a cue is
// present and 0 otherwise.
RawSceneObservation sample_scene(Rng& rng, const GeneratorConfig& config);

// The documented labeling formula: clamp(base + main effects + pairwise
// interactions + eps, 0, 10).
double oracle_risk(const CueTokenSet& tokens, double eps,
                   const OracleCoefficients& coeffs = OracleCoefficients{});

struct DatasetSummary {
  int n_scenes = 0;
  double label_mean = 0.0;
  double label_std = 0.0;
  std::array<int, 3> band_counts{};  // Low, Medium, High
};

// Generate n labeled scenes, deterministic in (config, seed).
Dataset generate_dataset(const GeneratorConfig& config);

DatasetSummary summarize(const Dataset& data);

struct DataSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Seeded shuffle then contiguous slices of floor(f1*n) / floor(f2*n) / rest.
// Throws ValidationError if fractions do not sum to 1 or a partition is empty.
DataSplits split_dataset(const Dataset& data, const std::array<double, 3>& fractions,
                         std::uint64_t seed);

// Scenes CSV: header scene_id,nm_p,nm_em,nm_wp,nm_f,nm_bl,conf_p,conf_em,
// conf_wp,conf_f,conf_bl,risk; UTF-8, LF line endings, reals with 6 fractional
// digits. Missing labels are written as an empty risk field.
void write_scenes_csv(const Dataset& data, const std::string& path);
Dataset read_scenes_csv(const std::string& path);

}  // namespace dusev
