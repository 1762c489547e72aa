#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dusev {

// The five scene-level cues, in canonical order. Every array indexed by cue
// uses this order.
enum class CueKind : int {
  Person = 0,
  Emotion = 1,
  Weapon = 2,
  Fire = 3,
  BodyLanguage = 4,
};

inline constexpr int kNumCues = 5;

inline constexpr std::array<CueKind, kNumCues> kCueOrder = {
    CueKind::Person, CueKind::Emotion, CueKind::Weapon, CueKind::Fire, CueKind::BodyLanguage};

std::string_view cue_name(CueKind kind);   // "person", "emotion", ...
std::string_view cue_short(CueKind kind);  // "p", "em", "wp", "f", "bl"

// Raw per-scene detector output: counts plus one aggregated confidence per
// cue. Confidence must be zero when the count is zero.
struct RawSceneObservation {
  std::string scene_id;
  std::array<int, kNumCues> counts{};
  std::array<double, kNumCues> confidences{};
  std::optional<double> label;  // ground-truth risk in [0, 10] when present
};

// One model input token: normalized cue value and detection confidence.
struct CueToken {
  double v = 0.0;
  double c = 0.0;
};

// The five tokens of a scene, canonical cue order.
struct CueTokenSet {
  std::array<CueToken, kNumCues> tokens{};
};

enum class RiskBand : int { Low = 0, Medium = 1, High = 2 };

std::string_view band_name(RiskBand band);

// Count ceilings used to scale raw counts into [0, 1]. Config-overridable.
struct NormalizationCaps {
  std::array<int, kNumCues> caps = {50, 20, 5, 3, 20};
};

// Scale counts by their caps (saturating) and carry confidences through.
// Throws ValidationError for negative counts or confidences outside [0, 1],
// ConfigError for caps below 1.
CueTokenSet tokenize(const RawSceneObservation& raw, const NormalizationCaps& caps);

// Map a continuous score in [0, 10] to a band. Boundaries at 3.5 and 6.5,
// half-open downward. Throws DomainError for NaN or out-of-range scores.
RiskBand quantize(double score);

// Collect every invariant violation of the observation. An empty result
// means the record is well-formed.
std::vector<std::string> validate_scene(const RawSceneObservation& raw);

}  // namespace dusev
