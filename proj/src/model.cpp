#include "dblp/model.hpp"

#include "dblp/errors.hpp"
#include "dblp/ops.hpp"
#include "dblp/optim.hpp"
#include "dblp/rng.hpp"

namespace dblp {
namespace {

constexpr const char* kWord = "word_lstm";
constexpr const char* kWordReverse = "word_lstm_reverse";
constexpr const char* kSentence = "sentence_lstm";
constexpr const char* kSentenceReverse = "sentence_lstm_reverse";

Direction opposite(Direction d) {
  return d == Direction::forward ? Direction::backward : Direction::forward;
}

template <class T>
T required(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view mode_name(ModelMode mode) {
  return mode == ModelMode::cls_ladder ? "cls-ladder" : "token-sequence";
}

ModelMode parse_mode(std::string_view name) {
  if (name == "token-sequence") return ModelMode::token_sequence;
  if (name == "cls-ladder") return ModelMode::cls_ladder;
  throw ConfigError("unknown mode '" + std::string(name) + "'; expected token-sequence or cls-ladder");
}

std::string_view direction_name(Direction direction) {
  return direction == Direction::forward ? "forward" : "backward";
}

Direction parse_direction(std::string_view name) {
  if (name == "forward") return Direction::forward;
  if (name == "backward") return Direction::backward;
  throw ConfigError("unknown direction '" + std::string(name) + "'; expected forward or backward");
}

std::string_view prefactor_name(LossPrefactor prefactor) {
  return prefactor == LossPrefactor::per_label ? "per-label" : "none";
}

LossPrefactor parse_prefactor(std::string_view name) {
  if (name == "per-label") return LossPrefactor::per_label;
  if (name == "none") return LossPrefactor::none;
  throw ConfigError("unknown loss prefactor '" + std::string(name) + "'; expected per-label or none");
}

std::size_t ModelConfig::word_summary_width() const {
  return word_hidden * (fusion.bidirectional ? 2 : 1);
}

std::size_t ModelConfig::sentence_input_width() const {
  if (fusion.mode == ModelMode::cls_ladder) return encoder.hidden;
  return encoder.hidden + word_summary_width();
}

std::size_t ModelConfig::pooled_width() const {
  return sentence_hidden * (fusion.bidirectional ? 2 : 1);
}

void ModelConfig::validate() const {
  encoder.validate();
  if (!(fusion.lambda >= 0.0 && fusion.lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (word_hidden == 0 || sentence_hidden == 0) throw ConfigError("LSTM hidden sizes must be positive");
  if (num_labels < 2) throw ConfigError("num_labels must be at least 2");
  if (!(loss.phi >= 0.0)) throw ConfigError("phi must be non-negative");
  if (max_len < 3) throw ConfigError("max_len must be at least 3");
  if (max_len > encoder.max_positions) {
    throw ConfigError("max_len " + std::to_string(max_len) + " exceeds max_positions " +
                      std::to_string(encoder.max_positions));
  }
  if (fusion.mode == ModelMode::cls_ladder && encoder.num_layers == 0) {
    throw ConfigError("cls-ladder mode needs at least one encoder layer");
  }
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j;
  j["num_layers"] = encoder.num_layers;
  j["hidden"] = encoder.hidden;
  j["heads"] = encoder.heads;
  j["ff"] = encoder.ff;
  j["vocab_size"] = encoder.vocab_size;
  j["max_positions"] = encoder.max_positions;
  j["num_segments"] = encoder.num_segments;
  j["freeze_below"] = encoder.effective_freeze_below();
  j["segment_embeddings"] = encoder.segment_embeddings;
  j["layer_norm_eps"] = encoder.layer_norm_eps;
  j["lambda"] = fusion.lambda;
  j["mode"] = mode_name(fusion.mode);
  j["word_direction"] = direction_name(fusion.word_direction);
  j["sentence_direction"] = direction_name(fusion.sentence_direction);
  j["bidirectional"] = fusion.bidirectional;
  j["word_hidden"] = word_hidden;
  j["sentence_hidden"] = sentence_hidden;
  j["num_labels"] = num_labels;
  j["phi"] = loss.phi;
  j["loss_prefactor"] = prefactor_name(loss.prefactor);
  j["max_len"] = max_len;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.encoder.num_layers = required<std::size_t>(j, "num_layers");
  c.encoder.hidden = required<std::size_t>(j, "hidden");
  c.encoder.heads = required<std::size_t>(j, "heads");
  c.encoder.ff = required<std::size_t>(j, "ff");
  c.encoder.vocab_size = required<std::size_t>(j, "vocab_size");
  c.encoder.max_positions = required<std::size_t>(j, "max_positions");
  c.encoder.num_segments = required<std::size_t>(j, "num_segments");
  c.encoder.freeze_below = required<std::size_t>(j, "freeze_below");
  c.encoder.segment_embeddings = required<bool>(j, "segment_embeddings");
  c.encoder.layer_norm_eps = required<double>(j, "layer_norm_eps");
  c.fusion.lambda = required<double>(j, "lambda");
  c.fusion.mode = parse_mode(required<std::string>(j, "mode"));
  c.fusion.word_direction = parse_direction(required<std::string>(j, "word_direction"));
  c.fusion.sentence_direction = parse_direction(required<std::string>(j, "sentence_direction"));
  c.fusion.bidirectional = required<bool>(j, "bidirectional");
  c.word_hidden = required<std::size_t>(j, "word_hidden");
  c.sentence_hidden = required<std::size_t>(j, "sentence_hidden");
  c.num_labels = required<std::size_t>(j, "num_labels");
  c.loss.phi = required<double>(j, "phi");
  c.loss.prefactor = parse_prefactor(required<std::string>(j, "loss_prefactor"));
  c.max_len = required<std::size_t>(j, "max_len");
  c.validate();
  return c;
}

std::vector<ParamSpec> model_param_specs(const ModelConfig& config) {
  config.validate();
  std::vector<ParamSpec> specs = encoder_param_specs(config.encoder);
  auto append = [&](std::vector<ParamSpec> more) {
    specs.insert(specs.end(), std::make_move_iterator(more.begin()),
                 std::make_move_iterator(more.end()));
  };
  const std::size_t d = config.encoder.hidden;
  if (config.fusion.mode == ModelMode::token_sequence) {
    append(lstm_param_specs(kWord, d, config.word_hidden));
    if (config.fusion.bidirectional) append(lstm_param_specs(kWordReverse, d, config.word_hidden));
  }
  const std::size_t n = config.sentence_input_width();
  append(lstm_param_specs(kSentence, n, config.sentence_hidden));
  if (config.fusion.bidirectional) {
    append(lstm_param_specs(kSentenceReverse, n, config.sentence_hidden));
  }
  append(head_param_specs(config.pooled_width(), config.num_labels));
  return specs;
}

Model::Model(ModelConfig config, Vocabulary vocab, std::vector<std::string> label_names,
             std::uint64_t seed, std::unique_ptr<ParameterStore> store)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      label_names_(std::move(label_names)),
      seed_(seed),
      store_(std::move(store)) {
  if (config_.encoder.vocab_size != vocab_.size()) {
    throw ConfigError("model vocab_size " + std::to_string(config_.encoder.vocab_size) +
                      " does not match vocabulary of " + std::to_string(vocab_.size()) + " tokens");
  }
  if (label_names_.size() != config_.num_labels) {
    throw ConfigError("model has " + std::to_string(config_.num_labels) + " labels but " +
                      std::to_string(label_names_.size()) + " label names");
  }
  bind();
}

Model::Model(ModelConfig config, Vocabulary vocab, std::vector<std::string> label_names,
             std::uint64_t seed)
    : Model(config, std::move(vocab), std::move(label_names), seed,
            std::make_unique<ParameterStore>()) {
  Rng rng(seed);
  for (const ParamSpec& spec : model_param_specs(config_)) {
    Parameter& p = store_->add(spec.name, spec.shape, spec.trainable);
    switch (spec.init) {
      case Init::uniform: init_uniform(p, rng); break;
      case Init::small: init_small(p, rng); break;
      case Init::zeros: break;
      case Init::ones:
        for (double& v : p.tensor.values()) v = 1.0;
        break;
    }
  }
  bind();
}

Model Model::restore(ModelConfig config, Vocabulary vocab, std::vector<std::string> label_names,
                     std::uint64_t seed, std::vector<Parameter> params) {
  const auto specs = model_param_specs(config);
  if (specs.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(params.size()) +
                      " parameters, configuration expects " + std::to_string(specs.size()));
  }
  auto store = std::make_unique<ParameterStore>();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (params[i].name != specs[i].name || params[i].tensor.shape() != specs[i].shape) {
      throw FormatError("checkpoint parameter " + std::to_string(i) + " is '" + params[i].name +
                        "' " + shape_string(params[i].tensor.shape()) + ", expected '" +
                        specs[i].name + "' " + shape_string(specs[i].shape));
    }
    Parameter& p = store->add(params[i].name, params[i].tensor.shape(), params[i].trainable);
    p.tensor = std::move(params[i].tensor);
    p.tensor.drop_grad();
  }
  return Model(std::move(config), std::move(vocab), std::move(label_names), seed, std::move(store));
}

void Model::bind() {
  if (store_->size() == 0) return;
  bound_.encoder = EncoderParams::bind(*store_, config_.encoder);
  if (config_.fusion.mode == ModelMode::token_sequence) {
    bound_.word = LstmCellParams::bind(*store_, kWord);
    if (config_.fusion.bidirectional) bound_.word_reverse = LstmCellParams::bind(*store_, kWordReverse);
  }
  bound_.sentence = LstmCellParams::bind(*store_, kSentence);
  if (config_.fusion.bidirectional) {
    bound_.sentence_reverse = LstmCellParams::bind(*store_, kSentenceReverse);
  }
  bound_.head = HeadParams::bind(*store_);
}

std::vector<Parameter*> Model::trainable_params() {
  std::vector<Parameter*> out;
  for (Parameter& p : *store_) {
    if (p.trainable) out.push_back(&p);
  }
  return out;
}

ParamCount Model::count_params() const { return dblp::count_params(*store_); }

TokenizedText Model::prepare(std::string_view text) const {
  return prepare_text(text, vocab_, config_.max_len);
}

Var Model::sentence_level(Tape& tape, Var features, std::size_t unfused_width) const {
  const Direction dir = config_.fusion.sentence_direction;
  Var out = run_sentence_lstm(tape, features, bound_.sentence, dir, unfused_width);
  if (!config_.fusion.bidirectional) return out;
  const Var parts[] = {
      out, run_sentence_lstm(tape, features, bound_.sentence_reverse, opposite(dir), unfused_width)};
  return concat_cols(parts);
}

Var Model::item_features(Tape& tape, const EncoderOutput& out, const EncodedBatch& batch,
                         std::size_t item) const {
  if (config_.fusion.mode == ModelMode::cls_ladder) {
    return sentence_level(tape, cls_ladder(out, item), 0);
  }
  const Var states = out.item_states(out.final_states(), item);
  const auto mask = batch.row_mask(item);
  const Direction dir = config_.fusion.word_direction;
  const bool bi = config_.fusion.bidirectional;
  const Var words = run_word_lstm(tape, states, mask, bound_.word, dir);
  Var words_rev;
  if (bi) words_rev = run_word_lstm(tape, states, mask, bound_.word_reverse, opposite(dir));

  std::vector<TokenSpan> spans = batch.clause_spans[item];
  // Text without clauses falls back to the [CLS] position as one clause.
  if (spans.empty()) spans.push_back(TokenSpan{0, 1});

  std::vector<Var> fused;
  Var first_hidden;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    Var hidden = clause_word_hidden(words, spans[s], dir);
    if (bi) {
      const Var parts[] = {hidden, clause_word_hidden(words_rev, spans[s], opposite(dir))};
      hidden = concat_cols(parts);
    }
    if (s == 0) first_hidden = hidden;
    fused.push_back(clause_fuse(clause_repr(states, spans[s]), hidden, config_.fusion.lambda));
  }
  const Var features = assemble_sentence_features(fused, first_hidden);
  return sentence_level(tape, features, config_.word_summary_width());
}

Var Model::forward(Tape& tape, std::span<const TokenizedText* const> items) const {
  if (items.empty()) throw ContractError("forward: empty batch");
  const EncodedBatch batch = encode_batch(items, config_.max_len);
  const Var embeddings =
      embed(tape, bound_.encoder, config_.encoder, batch.ids, {}, batch.batch, batch.seq);
  const EncoderOutput out =
      encoder_forward(tape, embeddings, batch.mask, bound_.encoder, config_.encoder);
  std::vector<Var> pooled;
  pooled.reserve(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    pooled.push_back(max_pool_time(item_features(tape, out, batch, b)));
  }
  const Var stacked = pooled.size() == 1 ? pooled[0] : concat_rows(pooled);
  return class_probs(tape, stacked, bound_.head);
}

Var Model::loss(Tape& tape, std::span<const TokenizedText* const> items,
                std::span<const std::size_t> labels) {
  if (items.size() != labels.size()) {
    throw DimensionError("loss: " + std::to_string(items.size()) + " items but " +
                         std::to_string(labels.size()) + " labels");
  }
  const Var probs = forward(tape, items);
  const auto regularized = trainable_params();
  return classification_loss(tape, probs, one_hot(labels, config_.num_labels), regularized,
                             config_.loss);
}

std::vector<std::vector<double>> Model::predict_proba(
    std::span<const TokenizedText* const> items) const {
  Tape tape;
  const Var probs = forward(tape, items);
  const Tensor& v = probs.value();
  const std::size_t m = v.row_width();
  std::vector<std::vector<double>> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto row = v.values().subspan(i * m, m);
    out[i].assign(row.begin(), row.end());
  }
  return out;
}

std::vector<double> Model::predict_proba(std::string_view text) const {
  const TokenizedText t = prepare(text);
  const TokenizedText* items[] = {&t};
  return predict_proba(items).front();
}

}  // namespace dblp
