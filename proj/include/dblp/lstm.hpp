#pragma once

// Word-level and sentence-level LSTMs with clause fusion.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dblp/param_spec.hpp"
#include "dblp/tape.hpp"
#include "dblp/text.hpp"

namespace dblp {

enum class Direction { forward, backward };

/// Gate weights of one LSTM cell: W_x* are k×n, W_h* are k×k, b_* are k.
struct LstmCellParams {
  Parameter* w_xf = nullptr;
  Parameter* w_hf = nullptr;
  Parameter* b_f = nullptr;
  Parameter* w_xi = nullptr;
  Parameter* w_hi = nullptr;
  Parameter* b_i = nullptr;
  Parameter* w_xc = nullptr;
  Parameter* w_hc = nullptr;
  Parameter* b_c = nullptr;
  Parameter* w_xo = nullptr;
  Parameter* w_ho = nullptr;
  Parameter* b_o = nullptr;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  static LstmCellParams bind(ParameterStore& store, const std::string& prefix);
};

/// Parameters "<prefix>.w_xf", "<prefix>.w_hf", "<prefix>.b_f", … for all
/// four gates.
std::vector<ParamSpec> lstm_param_specs(const std::string& prefix, std::size_t input_size,
                                        std::size_t hidden_size);

struct LstmState {
  Var h;  // 1×k
  Var c;  // 1×k
};

LstmState zero_state(Tape& tape, std::size_t hidden_size);

/// One step:
///   f = σ(W_xf x + W_hf h + b_f)    i = σ(W_xi x + W_hi h + b_i)
///   c̃ = tanh(W_xc x + W_hc h + b_c) c' = f∘c + i∘c̃
///   o = σ(W_xo x + W_ho h + b_o)    h' = o∘tanh(c')
LstmState lstm_cell_step(Tape& tape, Var x, const LstmState& state, const LstmCellParams& p);

/// Runs the cell over rows of `inputs` [T×n] from a zero state in the given
/// direction. Output row t is the hidden state after consuming row t.
/// Rows with mask 0 leave the state unchanged and emit zeros. An empty mask
/// means every row is real.
Var run_word_lstm(Tape& tape, Var inputs, std::span<const std::uint8_t> mask,
                  const LstmCellParams& p, Direction direction);

/// Mean of the token states [S×d] over a non-empty clause span: [1×d].
Var clause_repr(Var token_states, TokenSpan span);

/// [(1−λ)·clause, λ·word_hidden] as one row: [1×(d+k)].
Var clause_fuse(Var clause, Var word_hidden, double lambda);

/// Word-level hidden of a clause: the output at its last position in
/// iteration order (span end − 1 going forward, span begin going backward).
Var clause_word_hidden(Var word_outputs, TokenSpan span, Direction direction);

/// Sentence feature sequence: for a single clause, the unfused word-level
/// hidden [1×k]; for n ≥ 2 clauses, the fused rows stacked [n×(d+k)].
Var assemble_sentence_features(std::span<const Var> fused, Var word_hidden_first);

/// Sentence-level LSTM over the feature rows. A single-row input of width
/// `unfused_width` (< input size) is zero-padded in front to the input size.
Var run_sentence_lstm(Tape& tape, Var features, const LstmCellParams& p, Direction direction,
                      std::size_t unfused_width = 0);

}  // namespace dblp
