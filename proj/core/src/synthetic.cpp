#include "dusev/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dusev/error.hpp"

namespace dusev {

namespace {

constexpr char kCsvHeader[] =
    "scene_id,nm_p,nm_em,nm_wp,nm_f,nm_bl,conf_p,conf_em,conf_wp,conf_f,conf_bl,risk";

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_count(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("scenes csv: bad count '" + s + "' (" + context + ")");
  }
}

double parse_real(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("scenes csv: bad real '" + s + "' (" + context + ")");
  }
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_scenes < 1) throw ConfigError("GeneratorConfig: n_scenes must be >= 1");
  auto check_prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(std::string("GeneratorConfig: ") + name + " must be in [0,1]");
    }
  };
  check_prob(p_weapon, "p_weapon");
  check_prob(p_fire, "p_fire");
  check_prob(em_rate, "em_rate");
  check_prob(bl_rate, "bl_rate");
  if (!(person_rate > 0.0)) throw ConfigError("GeneratorConfig: person_rate must be > 0");
  if (!(label_noise_sigma >= 0.0)) {
    throw ConfigError("GeneratorConfig: label_noise_sigma must be >= 0");
  }
  for (int k = 0; k < kNumCues; ++k) {
    if (caps.caps[k] < 1) throw ConfigError("GeneratorConfig: caps must be >= 1");
  }
}

RawSceneObservation sample_scene(Rng& rng, const GeneratorConfig& config) {
  RawSceneObservation obs;
  const int persons =
      std::min(rng.poisson(config.person_rate), config.caps.caps[static_cast<int>(CueKind::Person)]);
  obs.counts[static_cast<int>(CueKind::Person)] = persons;
  obs.counts[static_cast<int>(CueKind::Weapon)] =
      rng.bernoulli(config.p_weapon) ? rng.uniform_int(1, 3) : 0;
  obs.counts[static_cast<int>(CueKind::Fire)] =
      rng.bernoulli(config.p_fire) ? rng.uniform_int(1, 2) : 0;
  obs.counts[static_cast<int>(CueKind::Emotion)] = rng.binomial(persons, config.em_rate);
  obs.counts[static_cast<int>(CueKind::BodyLanguage)] = rng.binomial(persons, config.bl_rate);
  for (int k = 0; k < kNumCues; ++k) {
    obs.confidences[k] = obs.counts[k] > 0 ? rng.uniform(0.6, 1.0) : 0.0;
  }
  return obs;
}

double oracle_risk(const CueTokenSet& tokens, double eps, const OracleCoefficients& coeffs) {
  const double v_p = tokens.tokens[static_cast<int>(CueKind::Person)].v;
  const double v_em = tokens.tokens[static_cast<int>(CueKind::Emotion)].v;
  const double v_wp = tokens.tokens[static_cast<int>(CueKind::Weapon)].v;
  const double v_f = tokens.tokens[static_cast<int>(CueKind::Fire)].v;
  const double v_bl = tokens.tokens[static_cast<int>(CueKind::BodyLanguage)].v;
  const double raw = coeffs.base + coeffs.wp * v_wp + coeffs.fire * v_f + coeffs.bl * v_bl +
                     coeffs.em * v_em + coeffs.p * v_p + coeffs.wp_em * v_wp * v_em +
                     coeffs.wp_bl * v_wp * v_bl + coeffs.em_fire * v_em * v_f + eps;
  return std::clamp(raw, 0.0, 10.0);
}

Dataset generate_dataset(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Dataset data;
  data.reserve(config.n_scenes);
  for (int i = 0; i < config.n_scenes; ++i) {
    RawSceneObservation obs = sample_scene(rng, config);
    char id[16];
    std::snprintf(id, sizeof(id), "s%06d", i + 1);
    obs.scene_id = id;
    const double eps =
        config.label_noise_sigma > 0.0 ? rng.normal(0.0, config.label_noise_sigma) : 0.0;
    obs.label = oracle_risk(tokenize(obs, config.caps), eps);
    data.push_back(std::move(obs));
  }
  return data;
}

DatasetSummary summarize(const Dataset& data) {
  DatasetSummary s;
  s.n_scenes = static_cast<int>(data.size());
  if (data.empty()) return s;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& obs : data) {
    if (!obs.label) throw ValidationError("summarize: scene '" + obs.scene_id + "' has no label");
    const double y = *obs.label;
    sum += y;
    sum_sq += y * y;
    s.band_counts[static_cast<int>(quantize(y))] += 1;
  }
  s.label_mean = sum / s.n_scenes;
  const double var = std::max(0.0, sum_sq / s.n_scenes - s.label_mean * s.label_mean);
  s.label_std = std::sqrt(var);
  return s;
}

DataSplits split_dataset(const Dataset& data, const std::array<double, 3>& fractions,
                         std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("split_dataset: fractions must sum to 1");
  }
  const int n = static_cast<int>(data.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(order[i], order[j]);
  }
  const int n_train = static_cast<int>(std::floor(fractions[0] * n));
  const int n_val = static_cast<int>(std::floor(fractions[1] * n));
  const int n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw ValidationError("split_dataset: a partition would be empty (n=" + std::to_string(n) +
                          ")");
  }
  DataSplits splits;
  splits.train.reserve(n_train);
  splits.val.reserve(n_val);
  splits.test.reserve(n_test);
  for (int i = 0; i < n; ++i) {
    const RawSceneObservation& obs = data[order[i]];
    if (i < n_train) {
      splits.train.push_back(obs);
    } else if (i < n_train + n_val) {
      splits.val.push_back(obs);
    } else {
      splits.test.push_back(obs);
    }
  }
  return splits;
}

void write_scenes_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_scenes_csv: cannot open '" + path + "' for writing");
  out << kCsvHeader << "\n";
  for (const auto& obs : data) {
    out << obs.scene_id;
    for (int k = 0; k < kNumCues; ++k) out << "," << obs.counts[k];
    for (int k = 0; k < kNumCues; ++k) out << "," << format_real(obs.confidences[k]);
    out << ",";
    if (obs.label) out << format_real(*obs.label);
    out << "\n";
  }
  if (!out) throw IoError("write_scenes_csv: write failed for '" + path + "'");
}

Dataset read_scenes_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_scenes_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("scenes csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw ValidationError("scenes csv: unexpected header in '" + path + "'");
  }
  Dataset data;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 12) {
      throw ValidationError("scenes csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected 12");
    }
    RawSceneObservation obs;
    obs.scene_id = fields[0];
    const std::string ctx = "line " + std::to_string(line_no);
    for (int k = 0; k < kNumCues; ++k) obs.counts[k] = parse_count(fields[1 + k], ctx);
    for (int k = 0; k < kNumCues; ++k) obs.confidences[k] = parse_real(fields[6 + k], ctx);
    if (!fields[11].empty()) obs.label = parse_real(fields[11], ctx);
    const auto violations = validate_scene(obs);
    if (!violations.empty()) {
      throw ValidationError("scenes csv: scene '" + obs.scene_id + "' (" + ctx +
                            "): " + violations.front());
    }
    data.push_back(std::move(obs));
  }
  return data;
}

}  // namespace dusev
