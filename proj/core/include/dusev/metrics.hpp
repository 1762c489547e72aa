#pragma once

#include <array>
#include <vector>

#include "dusev/cue.hpp"

namespace dusev {

// Regression metrics on the 0-10 score scale. R^2 is undefined for
// zero-variance targets; MAPE excludes targets below 1 and reports how many
// were excluded (it is undefined when every target is excluded).
struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;
  double mape = 0.0;  // percent
  bool mape_defined = true;
  int n_samples = 0;
  int n_excluded_from_mape = 0;
};

Metrics compute_metrics(const std::vector<double>& predictions,
                        const std::vector<double>& targets);

// Three-band confusion statistics; rows index the true band, columns the
// predicted band, in Low/Medium/High order.
struct BandReport {
  std::array<std::array<int, 3>, 3> confusion{};
  double accuracy = 0.0;
  std::array<double, 3> precision{};  // 0 when a band is never predicted
  std::array<double, 3> recall{};     // 0 when a band never occurs
  int n_samples = 0;
};

BandReport compute_band_report(const std::vector<double>& predictions,
                               const std::vector<double>& targets);

}  // namespace dusev
