#include "dblp/encoder.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dblp/errors.hpp"
#include "dblp/ops.hpp"

namespace dblp {
namespace {

std::string layer_prefix(std::size_t layer) {
  return "encoder.layer" + std::to_string(layer) + ".";
}

}  // namespace

std::size_t EncoderConfig::effective_freeze_below() const {
  if (freeze_below) return *freeze_below;
  return num_layers > 0 ? num_layers - 1 : 0;
}

void EncoderConfig::validate() const {
  if (hidden == 0) throw ConfigError("encoder: hidden size must be positive");
  if (heads == 0 || hidden % heads != 0) {
    throw ConfigError("encoder: heads (" + std::to_string(heads) + ") must divide hidden (" +
                      std::to_string(hidden) + ")");
  }
  if (num_layers > 0 && ff == 0) throw ConfigError("encoder: feed-forward width must be positive");
  if (vocab_size < 4) throw ConfigError("encoder: vocab_size must cover the special tokens");
  if (max_positions == 0) throw ConfigError("encoder: max_positions must be positive");
  if (segment_embeddings && num_segments == 0) {
    throw ConfigError("encoder: segment embeddings need at least one segment");
  }
  if (effective_freeze_below() > num_layers) {
    throw ConfigError("encoder: freeze_below (" + std::to_string(effective_freeze_below()) +
                      ") exceeds the number of layers (" + std::to_string(num_layers) + ")");
  }
}

std::vector<ParamSpec> encoder_param_specs(const EncoderConfig& config) {
  config.validate();
  const std::size_t d = config.hidden;
  const std::size_t f = config.ff;
  const std::size_t freeze = config.effective_freeze_below();
  const bool embeddings_trainable = freeze == 0;
  std::vector<ParamSpec> specs;
  specs.push_back({"encoder.embeddings.token", {config.vocab_size, d}, Init::small, embeddings_trainable});
  specs.push_back({"encoder.embeddings.position", {config.max_positions, d}, Init::small, embeddings_trainable});
  if (config.segment_embeddings) {
    specs.push_back({"encoder.embeddings.segment", {config.num_segments, d}, Init::small, embeddings_trainable});
  }
  specs.push_back({"encoder.embeddings.norm.gamma", {d}, Init::ones, embeddings_trainable});
  specs.push_back({"encoder.embeddings.norm.beta", {d}, Init::zeros, embeddings_trainable});
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::string p = layer_prefix(l);
    const bool trainable = l >= freeze;
    for (const char* m : {"wq", "wk", "wv", "wo"}) {
      const std::string bias = std::string("b") + m[1];
      specs.push_back({p + "attn." + m, {d, d}, Init::small, trainable});
      specs.push_back({p + "attn." + bias, {d}, Init::zeros, trainable});
    }
    specs.push_back({p + "attn_norm.gamma", {d}, Init::ones, trainable});
    specs.push_back({p + "attn_norm.beta", {d}, Init::zeros, trainable});
    specs.push_back({p + "ffn.w1", {f, d}, Init::small, trainable});
    specs.push_back({p + "ffn.b1", {f}, Init::zeros, trainable});
    specs.push_back({p + "ffn.w2", {d, f}, Init::small, trainable});
    specs.push_back({p + "ffn.b2", {d}, Init::zeros, trainable});
    specs.push_back({p + "ffn_norm.gamma", {d}, Init::ones, trainable});
    specs.push_back({p + "ffn_norm.beta", {d}, Init::zeros, trainable});
  }
  return specs;
}

EncoderParams EncoderParams::bind(ParameterStore& store, const EncoderConfig& config) {
  EncoderParams p;
  p.token = &store.get("encoder.embeddings.token");
  p.position = &store.get("encoder.embeddings.position");
  p.segment = config.segment_embeddings ? &store.get("encoder.embeddings.segment") : nullptr;
  p.norm_gamma = &store.get("encoder.embeddings.norm.gamma");
  p.norm_beta = &store.get("encoder.embeddings.norm.beta");
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::string pre = layer_prefix(l);
    EncoderLayerParams lp;
    lp.wq = &store.get(pre + "attn.wq");
    lp.bq = &store.get(pre + "attn.bq");
    lp.wk = &store.get(pre + "attn.wk");
    lp.bk = &store.get(pre + "attn.bk");
    lp.wv = &store.get(pre + "attn.wv");
    lp.bv = &store.get(pre + "attn.bv");
    lp.wo = &store.get(pre + "attn.wo");
    lp.bo = &store.get(pre + "attn.bo");
    lp.attn_gamma = &store.get(pre + "attn_norm.gamma");
    lp.attn_beta = &store.get(pre + "attn_norm.beta");
    lp.w1 = &store.get(pre + "ffn.w1");
    lp.b1 = &store.get(pre + "ffn.b1");
    lp.w2 = &store.get(pre + "ffn.w2");
    lp.b2 = &store.get(pre + "ffn.b2");
    lp.ffn_gamma = &store.get(pre + "ffn_norm.gamma");
    lp.ffn_beta = &store.get(pre + "ffn_norm.beta");
    p.layers.push_back(lp);
  }
  return p;
}

Var EncoderOutput::item_states(Var states, std::size_t item) const {
  return slice_rows(states, item * seq, (item + 1) * seq);
}

Var embed(Tape& tape, const EncoderParams& params, const EncoderConfig& config,
          std::span<const std::size_t> ids, std::span<const std::size_t> segment_ids,
          std::size_t batch, std::size_t seq) {
  if (ids.size() != batch * seq) {
    throw DimensionError("embed: expected " + std::to_string(batch * seq) + " ids, got " +
                         std::to_string(ids.size()));
  }
  if (seq > config.max_positions) {
    throw LookupError("embed: sequence length " + std::to_string(seq) +
                      " exceeds max positions " + std::to_string(config.max_positions));
  }
  if (!segment_ids.empty() && segment_ids.size() != ids.size()) {
    throw DimensionError("embed: segment ids do not match token ids");
  }
  std::vector<std::size_t> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % seq;

  Var x = add(embedding(tape.parameter(*params.token), ids),
              embedding(tape.parameter(*params.position), positions));
  if (params.segment != nullptr) {
    std::vector<std::size_t> segments(ids.size(), 0);
    if (!segment_ids.empty()) segments.assign(segment_ids.begin(), segment_ids.end());
    x = add(x, embedding(tape.parameter(*params.segment), segments));
  }
  x = layer_norm(x, tape.parameter(*params.norm_gamma), tape.parameter(*params.norm_beta),
                 config.layer_norm_eps);
  return reshape(x, Shape{batch, seq, config.hidden});
}

Var attention_block(Tape& tape, Var x, std::span<const std::uint8_t> mask,
                    const EncoderLayerParams& layer, const EncoderConfig& config,
                    std::size_t batch, std::size_t seq, std::vector<Var>* probabilities) {
  if (mask.size() != batch * seq) {
    throw DimensionError("attention: mask has " + std::to_string(mask.size()) +
                         " entries, expected " + std::to_string(batch * seq));
  }
  const std::size_t d = config.hidden;
  const std::size_t heads = config.heads;
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  auto P = [&](Parameter* p) { return tape.parameter(*p); };

  Var flat = reshape(x, Shape{batch * seq, d});
  Var q = linear(flat, P(layer.wq), P(layer.bq));
  Var k = linear(flat, P(layer.wk), P(layer.bk));
  Var v = linear(flat, P(layer.wv), P(layer.bv));

  std::vector<Var> contexts;
  contexts.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor key_bias(Shape{seq});
    for (std::size_t j = 0; j < seq; ++j) {
      key_bias[j] = mask[b * seq + j] ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    Var bias = tape.constant(std::move(key_bias));
    Var qb = slice_rows(q, b * seq, (b + 1) * seq);
    Var kb = slice_rows(k, b * seq, (b + 1) * seq);
    Var vb = slice_rows(v, b * seq, (b + 1) * seq);
    std::vector<Var> head_out;
    head_out.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      Var qh = slice_cols(qb, h * dh, (h + 1) * dh);
      Var kh = slice_cols(kb, h * dh, (h + 1) * dh);
      Var vh = slice_cols(vb, h * dh, (h + 1) * dh);
      Var scores = add_row(scale(matmul_nt(qh, kh), inv_sqrt), bias);
      Var probs = softmax_rows(scores);
      if (probabilities != nullptr) probabilities->push_back(probs);
      head_out.push_back(matmul(probs, vh));
    }
    contexts.push_back(heads == 1 ? head_out[0] : concat_cols(head_out));
  }
  Var context = batch == 1 ? contexts[0] : concat_rows(contexts);
  Var attended = linear(context, P(layer.wo), P(layer.bo));
  Var out = layer_norm(add(flat, attended), P(layer.attn_gamma), P(layer.attn_beta),
                       config.layer_norm_eps);
  return out;
}

Var feed_forward_block(Tape& tape, Var x, const EncoderLayerParams& layer,
                       const EncoderConfig& config) {
  auto P = [&](Parameter* p) { return tape.parameter(*p); };
  Var hidden = gelu(linear(x, P(layer.w1), P(layer.b1)));
  Var projected = linear(hidden, P(layer.w2), P(layer.b2));
  return layer_norm(add(x, projected), P(layer.ffn_gamma), P(layer.ffn_beta),
                    config.layer_norm_eps);
}

EncoderOutput encoder_forward(Tape& tape, Var embeddings, std::span<const std::uint8_t> mask,
                              const EncoderParams& params, const EncoderConfig& config) {
  const Shape& shape = embeddings.shape();
  if (shape.size() != 3 || shape[2] != config.hidden) {
    throw DimensionError("encoder_forward: expected batch×seq×" + std::to_string(config.hidden) +
                         " embeddings, got " + shape_string(shape));
  }
  EncoderOutput out;
  out.batch = shape[0];
  out.seq = shape[1];
  out.hidden = shape[2];
  out.embeddings = embeddings;
  if (mask.size() != out.batch * out.seq) {
    throw DimensionError("encoder_forward: mask does not match embeddings " + shape_string(shape));
  }
  Var x = reshape(embeddings, Shape{out.batch * out.seq, out.hidden});
  for (const EncoderLayerParams& layer : params.layers) {
    std::vector<Var> probs;
    x = attention_block(tape, x, mask, layer, config, out.batch, out.seq, &probs);
    x = feed_forward_block(tape, x, layer, config);
    out.layers.push_back(reshape(x, Shape{out.batch, out.seq, out.hidden}));
    out.attention.push_back(std::move(probs));
    std::vector<Var> cls_rows;
    for (std::size_t b = 0; b < out.batch; ++b) {
      cls_rows.push_back(slice_rows(x, b * out.seq, b * out.seq + 1));
    }
    out.cls.push_back(out.batch == 1 ? cls_rows[0] : concat_rows(cls_rows));
  }
  return out;
}

Var cls_ladder(const EncoderOutput& out, std::size_t item) {
  if (out.cls.empty()) throw ContractError("cls_ladder: encoder has no layers");
  if (item >= out.batch) throw LookupError("cls_ladder: item out of range");
  std::vector<Var> rows;
  rows.reserve(out.cls.size());
  for (const Var& cls : out.cls) rows.push_back(slice_rows(cls, item, item + 1));
  return concat_rows(rows);
}

Var classify_cls(Var x, Var weight) { return softmax_rows(linear(x, weight)); }

void apply_freeze(ParameterStore& store, const EncoderConfig& config) {
  config.validate();
  const std::size_t freeze = config.effective_freeze_below();
  const std::string emb = "encoder.embeddings.";
  const std::string layer = "encoder.layer";
  for (Parameter& p : store) {
    if (p.name.rfind(emb, 0) == 0) {
      p.trainable = freeze == 0;
    } else if (p.name.rfind(layer, 0) == 0) {
      const std::size_t index = std::stoul(p.name.substr(layer.size()));
      p.trainable = index >= freeze;
    }
  }
}

}  // namespace dblp
