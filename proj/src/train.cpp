#include "dblp/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "dblp/errors.hpp"
#include "dblp/optim.hpp"
#include "dblp/rng.hpp"

namespace dblp {
namespace {

using Snapshot = std::vector<std::vector<double>>;

Snapshot snapshot(const Model& model) {
  Snapshot s;
  for (const Parameter& p : model.params()) s.emplace_back(p.tensor.data());
  return s;
}

void restore(Model& model, const Snapshot& s) {
  std::size_t i = 0;
  for (Parameter& p : model.params()) {
    std::copy(s[i].begin(), s[i].end(), p.tensor.values().begin());
    ++i;
  }
}

}  // namespace

TrainConfig::TrainConfig() { model.encoder.vocab_size = 8000; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
  if (min_freq == 0) throw ConfigError("min_freq must be at least 1");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = model.to_json();
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["seed"] = seed;
  j["clip_norm"] = clip_norm;
  j["min_freq"] = min_freq;
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ConfigError("patience must be at least 1");
}

bool EarlyStopping::update(double loss) {
  ++epochs_;
  improved_ = best_epoch_ == 0 ? !std::isnan(loss) : loss < best_loss_;
  if (improved_) {
    best_loss_ = loss;
    best_epoch_ = epochs_;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return should_stop();
}

std::vector<const TokenizedText*> PreparedSplit::items(std::span<const std::size_t> indices) const {
  std::vector<const TokenizedText*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&texts.at(i));
  return out;
}

PreparedSplit prepare_split(const Model& model, std::span<const Example> examples) {
  PreparedSplit s;
  s.texts.reserve(examples.size());
  for (const Example& ex : examples) {
    if (ex.label >= model.config().num_labels) {
      throw DataError("example label " + std::to_string(ex.label) + " exceeds " +
                      std::to_string(model.config().num_labels) + " labels");
    }
    s.texts.push_back(model.prepare(ex.text));
    s.labels.push_back(ex.label);
  }
  return s;
}

Model build_model(const TrainConfig& config, std::span<const Example> train,
                  std::vector<std::string> label_names) {
  config.validate();
  if (train.empty()) throw DataError("build_model: empty training split");
  std::vector<std::string> corpus;
  corpus.reserve(train.size());
  for (const Example& ex : train) corpus.push_back(ex.text);
  Vocabulary vocab = build_vocab(corpus, config.model.encoder.vocab_size, config.min_freq);
  ModelConfig mc = config.model;
  mc.encoder.vocab_size = vocab.size();
  mc.num_labels = label_names.size();
  return Model(mc, std::move(vocab), std::move(label_names), config.seed);
}

double train_step(Model& model, std::span<const TokenizedText* const> items,
                  std::span<const std::size_t> labels, double learning_rate, double clip_norm) {
  auto params = model.trainable_params();
  Tape tape;
  const Var loss = model.loss(tape, items, labels);
  const double value = loss.value().item();
  if (!std::isfinite(value)) throw EvaluationError("non-finite training loss");
  for (Parameter* p : params) p->tensor.ensure_grad();
  tape.backward(loss);
  if (clip_norm > 0.0) clip_grad_norm(params, clip_norm);
  sgd_step(params, learning_rate);
  return value;
}

double mean_loss(Model& model, const PreparedSplit& split, std::size_t batch_size) {
  if (split.size() == 0) throw DataError("mean_loss: empty split");
  double total = 0.0;
  for (const auto& idx : batches(split.size(), batch_size)) {
    const auto items = split.items(idx);
    std::vector<std::size_t> labels;
    for (std::size_t i : idx) labels.push_back(split.labels[i]);
    Tape tape;
    total += model.loss(tape, items, labels).value().item() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(split.size());
}

TrainingRecord TrainResult::record(const TrainConfig& config) const {
  // Nanosecond resolution, matching what checkpoints store.
  const double seconds = std::round(train_seconds * 1e9) / 1e9;
  return TrainingRecord{best_epoch, epochs_run, seconds, config.to_json()};
}

TrainResult train(Model& model, std::span<const Example> train_split,
                  std::span<const Example> val_split, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (train_split.empty()) throw DataError("train: empty training split");
  if (val_split.empty()) throw DataError("train: empty validation split");
  const PreparedSplit tr = prepare_split(model, train_split);
  const PreparedSplit va = prepare_split(model, val_split);

  const auto start = std::chrono::steady_clock::now();
  Rng order_rng(config.seed ^ 0x5DEECE66DULL);
  EarlyStopping stopper(config.patience);
  Snapshot best = snapshot(model);
  TrainResult result;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    const auto plan = batches(tr.size(), config.batch_size, order_rng.next_u64());
    for (std::size_t b = 0; b < plan.size(); ++b) {
      const auto items = tr.items(plan[b]);
      std::vector<std::size_t> labels;
      for (std::size_t i : plan[b]) labels.push_back(tr.labels[i]);
      try {
        epoch_loss += train_step(model, items, labels, config.learning_rate, config.clip_norm) *
                      static_cast<double>(plan[b].size());
      } catch (const EvaluationError& e) {
        throw EvaluationError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(b + 1));
      }
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(tr.size());
    log.val_loss = mean_loss(model, va, config.batch_size);
    if (options.validation_override) log.val_loss = options.validation_override(epoch, log.val_loss);
    const bool stop = stopper.update(log.val_loss);
    log.improved = stopper.improved();
    if (log.improved) best = snapshot(model);
    result.history.push_back(log);
    if (options.on_epoch_end) options.on_epoch_end(log);
    if (stop) break;
  }
  restore(model, best);
  result.best_epoch = stopper.best_epoch();
  result.epochs_run = stopper.epochs_seen();
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<std::size_t> predict_labels(const Model& model, const PreparedSplit& split,
                                        std::size_t batch_size) {
  std::vector<std::size_t> out;
  out.reserve(split.size());
  for (const auto& idx : batches(split.size(), batch_size)) {
    for (const auto& probs : model.predict_proba(split.items(idx))) {
      out.push_back(predict_label(probs));
    }
  }
  return out;
}

MetricsReport evaluate(const Model& model, std::span<const Example> split, std::size_t batch_size) {
  if (split.empty()) throw DataError("evaluate: empty split");
  const PreparedSplit s = prepare_split(model, split);
  const auto predicted = predict_labels(model, s, batch_size);
  return weighted_metrics(confusion(s.labels, predicted, model.config().num_labels));
}

nlohmann::json ExperimentReport::to_json() const {
  return {{"precision", precision},   {"recall", recall},
          {"f1", f1},                 {"time_seconds", time_seconds},
          {"total_params", total_params}, {"trainable_params", trainable_params},
          {"epochs", epochs},         {"size_bytes", size_bytes}};
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  try {
    return ExperimentReport{j.at("precision").get<double>(),
                            j.at("recall").get<double>(),
                            j.at("f1").get<double>(),
                            j.at("time_seconds").get<double>(),
                            j.at("total_params").get<std::uint64_t>(),
                            j.at("trainable_params").get<std::uint64_t>(),
                            j.at("epochs").get<std::size_t>(),
                            j.at("size_bytes").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment report: ") + e.what());
  }
}

std::string ExperimentReport::to_table() const {
  char row[256];
  std::snprintf(row, sizeof row, "%-10s %-10s %-10s %-10s %-14s %-16s %-6s %s\n", "Precision",
                "Recall", "F1-score", "Time", "Total params", "Trainable params", "Epoch", "Size");
  std::string out = row;
  std::snprintf(row, sizeof row, "%-10.4f %-10.4f %-10.4f %-10.2f %-14llu %-16llu %-6zu %llu\n",
                precision, recall, f1, time_seconds, static_cast<unsigned long long>(total_params),
                static_cast<unsigned long long>(trainable_params), epochs,
                static_cast<unsigned long long>(size_bytes));
  return out + row;
}

ExperimentReport experiment_report(const Model& model, const TrainingRecord& record,
                                   const MetricsReport& metrics, std::uint64_t size_bytes) {
  const ParamCount count = model.count_params();
  ExperimentReport r;
  r.precision = metrics.precision_weighted;
  r.recall = metrics.recall_weighted;
  r.f1 = metrics.f_weighted;
  r.time_seconds = record.train_seconds;
  r.total_params = count.total;
  r.trainable_params = count.trainable;
  r.epochs = record.epochs_run;
  r.size_bytes = size_bytes;
  return r;
}

}  // namespace dblp
