#pragma once

// Distil-style transformer encoder: token + position + segment embeddings
// with layer normalization, followed by post-norm blocks of multi-head
// self-attention and a GELU feed-forward network.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dblp/param_spec.hpp"
#include "dblp/tape.hpp"

namespace dblp {

struct EncoderConfig {
  std::size_t num_layers = 6;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t ff = 256;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 128;
  std::size_t num_segments = 2;
  /// Layers with index below this are frozen, along with the embeddings.
  /// Unset means num_layers − 1 (only the last block trains).
  std::optional<std::size_t> freeze_below;
  bool segment_embeddings = true;
  double layer_norm_eps = 1e-12;

  std::size_t effective_freeze_below() const;
  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

struct EncoderLayerParams {
  Parameter* wq = nullptr;
  Parameter* bq = nullptr;
  Parameter* wk = nullptr;
  Parameter* bk = nullptr;
  Parameter* wv = nullptr;
  Parameter* bv = nullptr;
  Parameter* wo = nullptr;
  Parameter* bo = nullptr;
  Parameter* attn_gamma = nullptr;
  Parameter* attn_beta = nullptr;
  Parameter* w1 = nullptr;
  Parameter* b1 = nullptr;
  Parameter* w2 = nullptr;
  Parameter* b2 = nullptr;
  Parameter* ffn_gamma = nullptr;
  Parameter* ffn_beta = nullptr;
};

/// Non-owning view of encoder parameters inside a ParameterStore.
struct EncoderParams {
  Parameter* token = nullptr;
  Parameter* position = nullptr;
  Parameter* segment = nullptr;  // null when segment embeddings are disabled
  Parameter* norm_gamma = nullptr;
  Parameter* norm_beta = nullptr;
  std::vector<EncoderLayerParams> layers;

  static EncoderParams bind(ParameterStore& store, const EncoderConfig& config);
};

/// Parameters named "encoder.embeddings.*" and "encoder.layer<i>.*".
std::vector<ParamSpec> encoder_param_specs(const EncoderConfig& config);

struct EncoderOutput {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::size_t hidden = 0;
  Var embeddings;                  // batch×seq×hidden
  std::vector<Var> layers;         // per layer, batch×seq×hidden
  std::vector<Var> cls;            // per layer, batch×hidden
  /// Per layer, attention probabilities [seq×seq] indexed item·heads + head.
  std::vector<std::vector<Var>> attention;

  /// Last layer's states, or the embeddings when there are no layers.
  Var final_states() const { return layers.empty() ? embeddings : layers.back(); }
  /// Token states of one item from the given layer view: [seq×hidden].
  Var item_states(Var states, std::size_t item) const;
};

/// Sum of token, position and (when enabled) segment embeddings followed
/// by layer normalization. `segment_ids` may be empty, meaning segment 0.
Var embed(Tape& tape, const EncoderParams& params, const EncoderConfig& config,
          std::span<const std::size_t> ids, std::span<const std::size_t> segment_ids,
          std::size_t batch, std::size_t seq);

/// Multi-head scaled dot-product self-attention with residual and layer
/// norm. `x` is (batch·seq)×d; padded keys (mask 0) are set to −inf before
/// the softmax.
Var attention_block(Tape& tape, Var x, std::span<const std::uint8_t> mask,
                    const EncoderLayerParams& layer, const EncoderConfig& config,
                    std::size_t batch, std::size_t seq, std::vector<Var>* probabilities = nullptr);

/// Position-wise GELU feed-forward network with residual and layer norm.
Var feed_forward_block(Tape& tape, Var x, const EncoderLayerParams& layer,
                       const EncoderConfig& config);

EncoderOutput encoder_forward(Tape& tape, Var embeddings, std::span<const std::uint8_t> mask,
                              const EncoderParams& params, const EncoderConfig& config);

/// [CLS] vectors of every layer for one item, layer 1 first: [L×d].
/// Throws ContractError when the encoder has no layers.
Var cls_ladder(const EncoderOutput& out, std::size_t item);

/// softmax(W·x) over r classes for x [1×d], W [r×d].
Var classify_cls(Var x, Var weight);

/// Marks embeddings and blocks below the freeze boundary as frozen; the
/// rest of the encoder stays trainable.
void apply_freeze(ParameterStore& store, const EncoderConfig& config);

}  // namespace dblp
