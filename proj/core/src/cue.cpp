#include "dusev/cue.hpp"

#include <algorithm>
#include <cmath>

#include "dusev/error.hpp"

namespace dusev {

std::string_view cue_name(CueKind kind) {
  switch (kind) {
    case CueKind::Person: return "person";
    case CueKind::Emotion: return "emotion";
    case CueKind::Weapon: return "weapon";
    case CueKind::Fire: return "fire";
    case CueKind::BodyLanguage: return "body_language";
  }
  return "unknown";
}

std::string_view cue_short(CueKind kind) {
  switch (kind) {
    case CueKind::Person: return "p";
    case CueKind::Emotion: return "em";
    case CueKind::Weapon: return "wp";
    case CueKind::Fire: return "f";
    case CueKind::BodyLanguage: return "bl";
  }
  return "?";
}

std::string_view band_name(RiskBand band) {
  switch (band) {
    case RiskBand::Low: return "Low";
    case RiskBand::Medium: return "Medium";
    case RiskBand::High: return "High";
  }
  return "unknown";
}

CueTokenSet tokenize(const RawSceneObservation& raw, const NormalizationCaps& caps) {
  CueTokenSet out;
  for (int k = 0; k < kNumCues; ++k) {
    const auto kind = static_cast<CueKind>(k);
    if (caps.caps[k] < 1) {
      throw ConfigError("tokenize: cap for cue '" + std::string(cue_name(kind)) + "' must be >= 1");
    }
    if (raw.counts[k] < 0) {
      throw ValidationError("tokenize: negative count for cue '" + std::string(cue_name(kind)) +
                            "' in scene '" + raw.scene_id + "'");
    }
    const double c = raw.confidences[k];
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
      throw ValidationError("tokenize: confidence outside [0,1] for cue '" +
                            std::string(cue_name(kind)) + "' in scene '" + raw.scene_id + "'");
    }
    const int clipped = std::min(raw.counts[k], caps.caps[k]);
    out.tokens[k].v = static_cast<double>(clipped) / static_cast<double>(caps.caps[k]);
    out.tokens[k].c = c;
  }
  return out;
}

RiskBand quantize(double score) {
  if (!std::isfinite(score) || score < 0.0 || score > 10.0) {
    throw DomainError("quantize: score must be finite and in [0,10]");
  }
  if (score < 3.5) return RiskBand::Low;
  if (score < 6.5) return RiskBand::Medium;
  return RiskBand::High;
}

std::vector<std::string> validate_scene(const RawSceneObservation& raw) {
  std::vector<std::string> violations;
  for (int k = 0; k < kNumCues; ++k) {
    const auto kind = static_cast<CueKind>(k);
    const std::string name(cue_name(kind));
    if (raw.counts[k] < 0) {
      violations.push_back("negative count for " + name);
    }
    const double c = raw.confidences[k];
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
      violations.push_back("confidence out of range for " + name);
    } else if (raw.counts[k] == 0 && c != 0.0) {
      violations.push_back("confidence without detections for " + name);
    }
  }
  if (raw.label.has_value()) {
    const double y = *raw.label;
    if (!std::isfinite(y) || y < 0.0 || y > 10.0) {
      violations.push_back("label out of range");
    }
  }
  return violations;
}

}  // namespace dusev
