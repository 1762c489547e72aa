#include "dusev/metrics.hpp"

#include <cmath>
#include <string>

#include "dusev/error.hpp"

namespace dusev {

Metrics compute_metrics(const std::vector<double>& predictions,
                        const std::vector<double>& targets) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    throw ValidationError("compute_metrics: prediction/target lengths must match and be non-zero");
  }
  const int n = static_cast<int>(predictions.size());
  Metrics m;
  m.n_samples = n;

  double abs_sum = 0.0, sq_sum = 0.0, target_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = predictions[i] - targets[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    target_sum += targets[i];
  }
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);

  const double target_mean = target_sum / n;
  double ss_tot = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = targets[i] - target_mean;
    ss_tot += d * d;
  }
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - sq_sum / ss_tot;
  } else {
    m.r2_defined = false;
    m.r2 = 0.0;
  }

  double mape_sum = 0.0;
  int mape_n = 0;
  for (int i = 0; i < n; ++i) {
    if (targets[i] >= 1.0) {
      mape_sum += std::abs(predictions[i] - targets[i]) / std::abs(targets[i]);
      ++mape_n;
    }
  }
  m.n_excluded_from_mape = n - mape_n;
  if (mape_n > 0) {
    m.mape = 100.0 * mape_sum / mape_n;
  } else {
    m.mape_defined = false;
    m.mape = 0.0;
  }
  return m;
}

BandReport compute_band_report(const std::vector<double>& predictions,
                               const std::vector<double>& targets) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    throw ValidationError(
        "compute_band_report: prediction/target lengths must match and be non-zero");
  }
  BandReport report;
  report.n_samples = static_cast<int>(predictions.size());
  int correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int truth = static_cast<int>(quantize(targets[i]));
    const int pred = static_cast<int>(quantize(predictions[i]));
    report.confusion[truth][pred] += 1;
    if (truth == pred) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / report.n_samples;
  for (int band = 0; band < 3; ++band) {
    int pred_total = 0, true_total = 0;
    for (int other = 0; other < 3; ++other) {
      pred_total += report.confusion[other][band];
      true_total += report.confusion[band][other];
    }
    report.precision[band] =
        pred_total > 0 ? static_cast<double>(report.confusion[band][band]) / pred_total : 0.0;
    report.recall[band] =
        true_total > 0 ? static_cast<double>(report.confusion[band][band]) / true_total : 0.0;
  }
  return report;
}

}  // namespace dusev
