#include "dusev/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "dusev/error.hpp"
#include "dusev/rng.hpp"

namespace dusev {

namespace {

struct Tokenized {
  std::vector<CueTokenSet> tokens;
  std::vector<double> norm_targets;  // labels / score_scale
  std::vector<double> labels;        // 0-10 scale
};

Tokenized tokenize_split(const Dataset& data, const NormalizationCaps& caps, double score_scale,
                         const char* split_name) {
  Tokenized out;
  out.tokens.reserve(data.size());
  out.norm_targets.reserve(data.size());
  out.labels.reserve(data.size());
  for (const auto& obs : data) {
    if (!obs.label) {
      throw ValidationError(std::string("train: unlabeled scene '") + obs.scene_id + "' in " +
                            split_name + " split");
    }
    out.tokens.push_back(tokenize(obs, caps));
    out.labels.push_back(*obs.label);
    out.norm_targets.push_back(*obs.label / score_scale);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("TrainConfig: batch_size must be >= 2 (batch norm)");
  if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be > 0");
  if (patience < 1) throw ConfigError("TrainConfig: patience must be >= 1");
  if (patience > epochs) throw ConfigError("TrainConfig: patience must be <= epochs");
}

TrainResult train_model(const Dataset& train_split, const Dataset& val_split,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const NormalizationCaps& caps) {
  model_config.validate();
  train_config.validate();
  if (static_cast<int>(train_split.size()) < train_config.batch_size) {
    throw ValidationError("train: train split smaller than one batch");
  }
  if (val_split.empty()) throw ValidationError("train: empty validation split");

  const Tokenized train_data =
      tokenize_split(train_split, caps, model_config.score_scale, "train");
  const Tokenized val_data = tokenize_split(val_split, caps, model_config.score_scale, "val");

  ModelParams params = init_model(model_config);
  ModelParams best = params;
  Rng shuffle_rng(train_config.seed);

  History history;
  history.best_val_mse = std::numeric_limits<double>::infinity();
  int epochs_without_improvement = 0;

  const int n_train = static_cast<int>(train_data.tokens.size());
  const int n_batches = n_train / train_config.batch_size;
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    if (train_config.shuffle_each_epoch) {
      for (int i = n_train - 1; i > 0; --i) {
        const int j = shuffle_rng.uniform_int(0, i);
        std::swap(order[i], order[j]);
      }
    }

    double epoch_loss = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      std::vector<CueTokenSet> batch(train_config.batch_size);
      std::vector<double> targets(train_config.batch_size);
      for (int i = 0; i < train_config.batch_size; ++i) {
        const int idx = order[b * train_config.batch_size + i];
        batch[i] = train_data.tokens[idx];
        targets[i] = train_data.norm_targets[idx];
      }
      double loss;
      try {
        loss = loss_and_grads(batch, targets, params, Mode::Train);
      } catch (const NumericError& e) {
        throw NumericError("train: diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + "/" + std::to_string(n_batches) + ": " +
                           e.what());
      }
      epoch_loss += loss;
      params.for_each_param([&train_config](const std::string& name, ParamTensor& t) {
        adam_step(t, train_config.lr, name);
      });
    }
    epoch_loss /= n_batches;

    // validation in eval mode
    const std::vector<double> val_norm = predict_batch(val_data.tokens, params);
    double val_mse = 0.0, val_abs = 0.0, val_sq = 0.0;
    for (std::size_t i = 0; i < val_norm.size(); ++i) {
      const double err_norm = val_norm[i] - val_data.norm_targets[i];
      val_mse += err_norm * err_norm;
      const double err = model_config.score_scale * val_norm[i] - val_data.labels[i];
      val_abs += std::abs(err);
      val_sq += err * err;
    }
    val_mse /= val_norm.size();
    const double val_mae = val_abs / val_norm.size();
    const double val_rmse = std::sqrt(val_sq / val_norm.size());

    EpochStats stats{epoch, epoch_loss, val_mse, val_mae, val_rmse, false};
    if (val_mse < history.best_val_mse) {
      history.best_val_mse = val_mse;
      history.best_epoch = epoch;
      best = params;
      stats.is_best = true;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
    }
    history.epochs.push_back(stats);

    if (epochs_without_improvement >= train_config.patience) {
      history.stop_reason = "early_stop";
      break;
    }
  }
  if (history.stop_reason.empty()) history.stop_reason = "max_epochs";

  return TrainResult{std::move(best), std::move(history)};
}

std::vector<double> predict_scores(const Dataset& data, const ModelParams& params,
                                   const NormalizationCaps& caps) {
  std::vector<CueTokenSet> tokens;
  tokens.reserve(data.size());
  for (const auto& obs : data) tokens.push_back(tokenize(obs, caps));
  std::vector<double> norm = predict_batch(tokens, params);
  for (double& p : norm) p *= params.config.score_scale;
  return norm;
}

void write_history_csv(const History& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_history_csv: cannot open '" + path + "' for writing");
  out << "epoch,train_mse,val_mae,val_rmse,is_best\n";
  char buf[128];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.8f,%.6f,%.6f,%d\n", e.epoch, e.train_mse, e.val_mae,
                  e.val_rmse, e.is_best ? 1 : 0);
    out << buf;
  }
  if (!out) throw IoError("write_history_csv: write failed for '" + path + "'");
}

}  // namespace dusev
