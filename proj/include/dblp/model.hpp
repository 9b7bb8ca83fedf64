#pragma once

// The full classifier: encoder, word-level LSTM over token states, clause
// fusion, sentence-level LSTM, max-over-time pooling and softmax head.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dblp/encoder.hpp"
#include "dblp/head.hpp"
#include "dblp/lstm.hpp"
#include "dblp/param_spec.hpp"
#include "dblp/tape.hpp"
#include "dblp/text.hpp"
#include "json.hpp"

namespace dblp {

enum class ModelMode {
  token_sequence,  // clauses of final-layer token states feed the sentence LSTM
  cls_ladder,      // the per-layer [CLS] vectors feed the sentence LSTM
};

std::string_view mode_name(ModelMode mode);
ModelMode parse_mode(std::string_view name);
std::string_view direction_name(Direction direction);
Direction parse_direction(std::string_view name);
std::string_view prefactor_name(LossPrefactor prefactor);
LossPrefactor parse_prefactor(std::string_view name);

struct FusionConfig {
  double lambda = 0.5;
  ModelMode mode = ModelMode::token_sequence;
  Direction word_direction = Direction::forward;
  Direction sentence_direction = Direction::backward;
  /// Runs both directions at each level and concatenates their outputs.
  bool bidirectional = false;
};

struct ModelConfig {
  EncoderConfig encoder;
  FusionConfig fusion;
  std::size_t word_hidden = 64;
  std::size_t sentence_hidden = 64;
  std::size_t num_labels = 2;
  LossOptions loss{1e-5, LossPrefactor::per_label, 1e-12};
  std::size_t max_len = 128;

  /// Width of one word-level summary (doubled when bidirectional).
  std::size_t word_summary_width() const;
  std::size_t sentence_input_width() const;
  std::size_t pooled_width() const;
  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig& other) const { return to_json() == other.to_json(); }
};

/// Every parameter of the model in initialization order.
std::vector<ParamSpec> model_param_specs(const ModelConfig& config);

class Model {
 public:
  /// Allocates and initializes parameters from a generator seeded with `seed`.
  Model(ModelConfig config, Vocabulary vocab, std::vector<std::string> label_names,
        std::uint64_t seed);

  /// Rebuilds a model from stored parameters. Names and shapes must match
  /// model_param_specs(config) in order; throws FormatError otherwise.
  static Model restore(ModelConfig config, Vocabulary vocab, std::vector<std::string> label_names,
                       std::uint64_t seed, std::vector<Parameter> params);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  std::uint64_t seed() const { return seed_; }

  ParameterStore& params() { return *store_; }
  const ParameterStore& params() const { return *store_; }
  std::vector<Parameter*> trainable_params();
  ParamCount count_params() const;

  TokenizedText prepare(std::string_view text) const;

  /// Class probabilities [B×m] for a batch of prepared texts.
  Var forward(Tape& tape, std::span<const TokenizedText* const> items) const;
  /// Objective on a labelled batch.
  Var loss(Tape& tape, std::span<const TokenizedText* const> items,
           std::span<const std::size_t> labels);

  std::vector<std::vector<double>> predict_proba(std::span<const TokenizedText* const> items) const;
  std::vector<double> predict_proba(std::string_view text) const;

 private:
  struct Bound {
    EncoderParams encoder;
    LstmCellParams word, word_reverse;
    LstmCellParams sentence, sentence_reverse;
    HeadParams head;
  };

  Model(ModelConfig config, Vocabulary vocab, std::vector<std::string> label_names,
        std::uint64_t seed, std::unique_ptr<ParameterStore> store);
  void bind();
  Var item_features(Tape& tape, const EncoderOutput& out, const EncodedBatch& batch,
                    std::size_t item) const;
  Var sentence_level(Tape& tape, Var features, std::size_t unfused_width) const;

  ModelConfig config_;
  Vocabulary vocab_;
  std::vector<std::string> label_names_;
  std::uint64_t seed_ = 0;
  std::unique_ptr<ParameterStore> store_;
  Bound bound_;
};

}  // namespace dblp
