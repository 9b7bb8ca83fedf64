#pragma once

// Mini-batch SGD training with validation-loss early stopping, evaluation
// and experiment reports.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dblp/checkpoint.hpp"
#include "dblp/data.hpp"
#include "dblp/metrics.hpp"
#include "dblp/model.hpp"
#include "json.hpp"

namespace dblp {

struct TrainConfig {
  /// encoder.vocab_size caps the vocabulary built from the training split;
  /// num_labels is taken from the data.
  ModelConfig model;
  double learning_rate = 0.3;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 5.0;
  std::size_t min_freq = 1;

  TrainConfig();
  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Patience rule over validation losses: an epoch improves only when its
/// loss is strictly below the best seen so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records the loss of the next epoch (1-based). Returns true once
  /// `patience` consecutive epochs have failed to improve.
  bool update(double loss);

  bool improved() const { return improved_; }
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t epochs_seen() const { return epochs_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t stale_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  bool improved_ = false;
};

/// Tokenized texts with their labels, prepared once per split.
struct PreparedSplit {
  std::vector<TokenizedText> texts;
  std::vector<std::size_t> labels;

  std::size_t size() const { return texts.size(); }
  std::vector<const TokenizedText*> items(std::span<const std::size_t> indices) const;
};

PreparedSplit prepare_split(const Model& model, std::span<const Example> examples);

/// Builds the vocabulary from the training texts and initializes a model.
Model build_model(const TrainConfig& config, std::span<const Example> train,
                  std::vector<std::string> label_names);

/// One SGD step on a batch; returns the batch loss before the update.
/// Throws EvaluationError when the loss is not finite.
double train_step(Model& model, std::span<const TokenizedText* const> items,
                  std::span<const std::size_t> labels, double learning_rate, double clip_norm);

/// Objective averaged over every example of the split.
double mean_loss(Model& model, const PreparedSplit& split, std::size_t batch_size);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainOptions {
  /// Replaces the computed validation loss of an epoch when set.
  std::function<double(std::size_t epoch, double computed)> validation_override;
  std::function<void(const EpochLog&)> on_epoch_end;
};

struct TrainResult {
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double train_seconds = 0.0;
  std::vector<EpochLog> history;

  TrainingRecord record(const TrainConfig& config) const;
};

/// Trains until early stopping or max_epochs and restores the parameters
/// of the best validation epoch. Throws DataError on an empty split.
TrainResult train(Model& model, std::span<const Example> train_split,
                  std::span<const Example> val_split, const TrainConfig& config,
                  const TrainOptions& options = {});

std::vector<std::size_t> predict_labels(const Model& model, const PreparedSplit& split,
                                        std::size_t batch_size = 32);

/// Weighted metrics on a split. Throws DataError when it is empty.
MetricsReport evaluate(const Model& model, std::span<const Example> split,
                       std::size_t batch_size = 32);

struct ExperimentReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double time_seconds = 0.0;
  std::uint64_t total_params = 0;
  std::uint64_t trainable_params = 0;
  std::size_t epochs = 0;
  std::uint64_t size_bytes = 0;

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
  /// Header line and one aligned row.
  std::string to_table() const;

  bool operator==(const ExperimentReport&) const = default;
};

ExperimentReport experiment_report(const Model& model, const TrainingRecord& record,
                                   const MetricsReport& metrics, std::uint64_t size_bytes);

}  // namespace dblp
