#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dusev/metrics.hpp"
#include "dusev/model.hpp"
#include "dusev/synthetic.hpp"

namespace dusev {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double lr = 1e-4;
  int patience = 8;
  std::uint64_t seed = 42;
  bool shuffle_each_epoch = true;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;  // early-stopping criterion (normalized scale)
  double val_mae = 0.0;  // 0-10 scale
  double val_rmse = 0.0;
  bool is_best = false;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based
  double best_val_mse = 0.0;
  std::string stop_reason;  // "early_stop" or "max_epochs"
};

struct TrainResult {
  ModelParams best_params;
  History history;
};

// Mini-batch MSE + Adam over the train split with per-epoch validation.
// Keeps the parameters of the best-validation epoch and stops early after
// `patience` consecutive epochs without improvement. The last incomplete
// batch of each epoch is dropped (batch-norm stability); evaluation keeps
// every sample. Deterministic in (configs, seeds).
TrainResult train_model(const Dataset& train_split, const Dataset& val_split,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const NormalizationCaps& caps);

// Eval-mode scores (0-10 scale) for every scene, processed in fixed order.
std::vector<double> predict_scores(const Dataset& data, const ModelParams& params,
                                   const NormalizationCaps& caps);

// History CSV: epoch,train_mse,val_mae,val_rmse,is_best.
void write_history_csv(const History& history, const std::string& path);

}  // namespace dusev
