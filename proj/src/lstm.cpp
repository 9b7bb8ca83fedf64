#include "dblp/lstm.hpp"

#include <string>

#include "dblp/errors.hpp"
#include "dblp/ops.hpp"

namespace dblp {
namespace {

struct GateInputs {
  Var f, i, c, o;  // x-projections including bias, 1×k each
};

LstmState step_from_projections(Tape& tape, const GateInputs& gx, const LstmState& state,
                                const LstmCellParams& p) {
  Var h = state.h;
  Var f = sigmoid(add(gx.f, linear(h, tape.parameter(*p.w_hf))));
  Var i = sigmoid(add(gx.i, linear(h, tape.parameter(*p.w_hi))));
  Var candidate = tanh(add(gx.c, linear(h, tape.parameter(*p.w_hc))));
  Var c = add(mul(f, state.c), mul(i, candidate));
  Var o = sigmoid(add(gx.o, linear(h, tape.parameter(*p.w_ho))));
  return LstmState{mul(o, tanh(c)), c};
}

void check_input_width(Var inputs, const LstmCellParams& p, const char* op) {
  if (inputs.value().row_width() != p.input_size) {
    throw DimensionError(std::string(op) + ": input " + shape_string(inputs.shape()) +
                         " does not match cell input size " + std::to_string(p.input_size));
  }
}

// Runs the cell over all rows; masked rows (mask[t] == 0) are skipped.
Var run_cell(Tape& tape, Var inputs, std::span<const std::uint8_t> mask, const LstmCellParams& p,
             Direction direction) {
  const std::size_t steps = inputs.value().row_count();
  if (steps == 0) throw ContractError("lstm: empty input sequence");
  if (!mask.empty() && mask.size() != steps) {
    throw DimensionError("lstm: mask length " + std::to_string(mask.size()) +
                         " does not match sequence length " + std::to_string(steps));
  }
  auto P = [&](Parameter* param) { return tape.parameter(*param); };
  Var flat = reshape(inputs, Shape{steps, p.input_size});
  const Var proj_f = linear(flat, P(p.w_xf), P(p.b_f));
  const Var proj_i = linear(flat, P(p.w_xi), P(p.b_i));
  const Var proj_c = linear(flat, P(p.w_xc), P(p.b_c));
  const Var proj_o = linear(flat, P(p.w_xo), P(p.b_o));

  LstmState state = zero_state(tape, p.hidden_size);
  std::vector<Var> outputs(steps);
  Var zeros;
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = direction == Direction::forward ? n : steps - 1 - n;
    if (!mask.empty() && mask[t] == 0) {
      if (zeros.tape == nullptr) zeros = tape.constant(Tensor(Shape{1, p.hidden_size}));
      outputs[t] = zeros;
      continue;
    }
    GateInputs gx{slice_rows(proj_f, t, t + 1), slice_rows(proj_i, t, t + 1),
                  slice_rows(proj_c, t, t + 1), slice_rows(proj_o, t, t + 1)};
    state = step_from_projections(tape, gx, state, p);
    outputs[t] = state.h;
  }
  return steps == 1 ? outputs[0] : concat_rows(outputs);
}

}  // namespace

std::vector<ParamSpec> lstm_param_specs(const std::string& prefix, std::size_t input_size,
                                        std::size_t hidden_size) {
  std::vector<ParamSpec> specs;
  for (const char* gate : {"f", "i", "c", "o"}) {
    specs.push_back({prefix + ".w_x" + gate, {hidden_size, input_size}, Init::uniform, true});
    specs.push_back({prefix + ".w_h" + gate, {hidden_size, hidden_size}, Init::uniform, true});
    specs.push_back({prefix + ".b_" + gate, {hidden_size}, Init::zeros, true});
  }
  return specs;
}

LstmCellParams LstmCellParams::bind(ParameterStore& store, const std::string& prefix) {
  LstmCellParams p;
  p.w_xf = &store.get(prefix + ".w_xf");
  p.w_hf = &store.get(prefix + ".w_hf");
  p.b_f = &store.get(prefix + ".b_f");
  p.w_xi = &store.get(prefix + ".w_xi");
  p.w_hi = &store.get(prefix + ".w_hi");
  p.b_i = &store.get(prefix + ".b_i");
  p.w_xc = &store.get(prefix + ".w_xc");
  p.w_hc = &store.get(prefix + ".w_hc");
  p.b_c = &store.get(prefix + ".b_c");
  p.w_xo = &store.get(prefix + ".w_xo");
  p.w_ho = &store.get(prefix + ".w_ho");
  p.b_o = &store.get(prefix + ".b_o");
  p.hidden_size = p.w_xf->tensor.shape()[0];
  p.input_size = p.w_xf->tensor.shape()[1];
  return p;
}

LstmState zero_state(Tape& tape, std::size_t hidden_size) {
  Var zeros = tape.constant(Tensor(Shape{1, hidden_size}));
  return LstmState{zeros, zeros};
}

LstmState lstm_cell_step(Tape& tape, Var x, const LstmState& state, const LstmCellParams& p) {
  check_input_width(x, p, "lstm_cell_step");
  if (x.value().row_count() != 1 || state.h.value().size() != p.hidden_size ||
      state.c.value().size() != p.hidden_size) {
    throw DimensionError("lstm_cell_step: expected a single input row and " +
                         std::to_string(p.hidden_size) + "-wide state");
  }
  auto P = [&](Parameter* param) { return tape.parameter(*param); };
  Var row = reshape(x, Shape{1, p.input_size});
  GateInputs gx{linear(row, P(p.w_xf), P(p.b_f)), linear(row, P(p.w_xi), P(p.b_i)),
                linear(row, P(p.w_xc), P(p.b_c)), linear(row, P(p.w_xo), P(p.b_o))};
  LstmState in{reshape(state.h, Shape{1, p.hidden_size}), reshape(state.c, Shape{1, p.hidden_size})};
  return step_from_projections(tape, gx, in, p);
}

Var run_word_lstm(Tape& tape, Var inputs, std::span<const std::uint8_t> mask,
                  const LstmCellParams& p, Direction direction) {
  check_input_width(inputs, p, "run_word_lstm");
  return run_cell(tape, inputs, mask, p, direction);
}

Var clause_repr(Var token_states, TokenSpan span) {
  if (span.begin >= span.end) throw ContractError("clause_repr: empty clause span");
  return mean_rows(slice_rows(token_states, span.begin, span.end));
}

Var clause_fuse(Var clause, Var word_hidden, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("clause_fuse: lambda must lie in [0, 1]");
  }
  const Var parts[] = {scale(clause, 1.0 - lambda), scale(word_hidden, lambda)};
  return concat_cols(parts);
}

Var clause_word_hidden(Var word_outputs, TokenSpan span, Direction direction) {
  if (span.begin >= span.end) throw ContractError("clause_word_hidden: empty clause span");
  const std::size_t row = direction == Direction::forward ? span.end - 1 : span.begin;
  return slice_rows(word_outputs, row, row + 1);
}

Var assemble_sentence_features(std::span<const Var> fused, Var word_hidden_first) {
  if (fused.empty()) throw ContractError("assemble_sentence_features: no clauses");
  if (fused.size() == 1) return word_hidden_first;
  return concat_rows(fused);
}

Var run_sentence_lstm(Tape& tape, Var features, const LstmCellParams& p, Direction direction,
                      std::size_t unfused_width) {
  const std::size_t width = features.value().row_width();
  if (width != p.input_size) {
    const bool pad = unfused_width != 0 && width == unfused_width &&
                     features.value().row_count() == 1 && unfused_width < p.input_size;
    if (!pad) {
      throw DimensionError("run_sentence_lstm: feature width " + std::to_string(width) +
                           " does not match cell input size " + std::to_string(p.input_size));
    }
    const Var parts[] = {tape.constant(Tensor(Shape{1, p.input_size - width})),
                         reshape(features, Shape{1, width})};
    features = concat_cols(parts);
  }
  return run_cell(tape, features, {}, p, direction);
}

}  // namespace dblp
