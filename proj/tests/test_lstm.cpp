#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dblp/errors.hpp"
#include "dblp/gradcheck.hpp"
#include "dblp/lstm.hpp"
#include "dblp/ops.hpp"
#include "support.hpp"

using namespace dblp;

namespace {

struct Cell {
  ParameterStore store;
  LstmCellParams p;

  Cell(std::size_t n, std::size_t k, std::uint64_t seed, double scale = 0.5,
       const std::string& prefix = "cell") {
    for (const auto& s : lstm_param_specs(prefix, n, k)) store.add(s.name, s.shape, s.trainable);
    Rng rng(seed);
    testing::randomize(store, rng, scale);
    p = LstmCellParams::bind(store, prefix);
  }
};

// Plain-loop LSTM step written from the gate equations.
struct OracleState {
  std::vector<double> h, c;
};

OracleState oracle_step(const LstmCellParams& p, const std::vector<double>& x, const OracleState& s) {
  const std::size_t n = p.input_size, k = p.hidden_size;
  auto gate = [&](const Parameter* wx, const Parameter* wh, const Parameter* b, std::size_t r) {
    double z = b->tensor[r];
    for (std::size_t j = 0; j < n; ++j) z += wx->tensor[r * n + j] * x[j];
    for (std::size_t j = 0; j < k; ++j) z += wh->tensor[r * k + j] * s.h[j];
    return z;
  };
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  OracleState out{std::vector<double>(k), std::vector<double>(k)};
  for (std::size_t r = 0; r < k; ++r) {
    const double f = sig(gate(p.w_xf, p.w_hf, p.b_f, r));
    const double i = sig(gate(p.w_xi, p.w_hi, p.b_i, r));
    const double cand = std::tanh(gate(p.w_xc, p.w_hc, p.b_c, r));
    const double o = sig(gate(p.w_xo, p.w_ho, p.b_o, r));
    out.c[r] = f * s.c[r] + i * cand;
    out.h[r] = o * std::tanh(out.c[r]);
  }
  return out;
}

std::vector<double> row(const Tensor& t, std::size_t r) {
  const auto s = t.values().subspan(r * t.row_width(), t.row_width());
  return {s.begin(), s.end()};
}

Var probe(Tape& tape, Var y, std::uint64_t seed = 31) {
  Rng rng(seed);
  return sum(mul(y, tape.constant(testing::random_tensor(y.shape(), rng))));
}

}  // namespace

TEST_CASE("lstm parameter shapes and count") {
  const auto specs = lstm_param_specs("x", 3, 2);
  CHECK(count_params(specs).total == 48);
  Cell cell(3, 2, 1);
  CHECK(cell.p.w_xf->tensor.shape() == Shape{2, 3});
  CHECK(cell.p.w_hf->tensor.shape() == Shape{2, 2});
  CHECK(cell.p.b_f->tensor.shape() == Shape{2});
  CHECK(cell.p.input_size == 3);
  CHECK(cell.p.hidden_size == 2);
}

TEST_CASE("zero parameters keep a zero state at zero") {
  Cell cell(3, 4, 1);
  for (Parameter& p : cell.store) std::fill(p.tensor.values().begin(), p.tensor.values().end(), 0.0);
  Tape tape;
  const LstmState out = lstm_cell_step(tape, tape.constant(Tensor::matrix({{1, -2, 3}})),
                                       zero_state(tape, 4), cell.p);
  for (double v : out.h.value().values()) CHECK(v == 0.0);
  for (double v : out.c.value().values()) CHECK(v == 0.0);
}

TEST_CASE("zero parameters halve a unit memory cell") {
  Cell cell(1, 1, 1);
  for (Parameter& p : cell.store) std::fill(p.tensor.values().begin(), p.tensor.values().end(), 0.0);
  Tape tape;
  const LstmState s{tape.constant(Tensor::matrix({{0.0}})), tape.constant(Tensor::matrix({{1.0}}))};
  const LstmState out = lstm_cell_step(tape, tape.constant(Tensor::matrix({{0.7}})), s, cell.p);
  CHECK(out.c.value().item() == 0.5);
  CHECK(out.h.value().item() == doctest::Approx(0.5 * std::tanh(0.5)));
  CHECK(out.h.value().item() == doctest::Approx(0.231059).epsilon(1e-6));
}

TEST_CASE("cell step matches the scalar oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Cell cell(5, 3, seed, 1.0);
    Rng rng(seed + 100);
    const Tensor x = testing::random_tensor(Shape{1, 5}, rng);
    const Tensor h = testing::random_tensor(Shape{1, 3}, rng);
    const Tensor c = testing::random_tensor(Shape{1, 3}, rng);
    Tape tape;
    const LstmState got =
        lstm_cell_step(tape, tape.constant(x), {tape.constant(h), tape.constant(c)}, cell.p);
    const OracleState want = oracle_step(cell.p, row(x, 0), {row(h, 0), row(c, 0)});
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(got.h.value()[r] == doctest::Approx(want.h[r]).epsilon(1e-13));
      CHECK(got.c.value()[r] == doctest::Approx(want.c[r]).epsilon(1e-13));
    }
  }
  Cell cell(5, 3, 1);
  Tape tape;
  CHECK_THROWS_AS(lstm_cell_step(tape, tape.constant(Tensor(Shape{1, 4})), zero_state(tape, 3), cell.p),
                  DimensionError);
}

TEST_CASE("word lstm follows the oracle in both directions") {
  Cell cell(4, 3, 2, 1.0);
  Rng rng(5);
  const Tensor xs = testing::random_tensor(Shape{5, 4}, rng);
  for (Direction dir : {Direction::forward, Direction::backward}) {
    Tape tape;
    const Tensor out = run_word_lstm(tape, tape.constant(xs), {}, cell.p, dir).value();
    CHECK(out.shape() == Shape{5, 3});
    OracleState s{std::vector<double>(3), std::vector<double>(3)};
    for (std::size_t n = 0; n < 5; ++n) {
      const std::size_t t = dir == Direction::forward ? n : 4 - n;
      s = oracle_step(cell.p, row(xs, t), s);
      for (std::size_t r = 0; r < 3; ++r) CHECK(out.at(t, r) == doctest::Approx(s.h[r]).epsilon(1e-13));
    }
  }
}

TEST_CASE("single-step word lstm equals one cell step") {
  Cell cell(4, 3, 3);
  Tape tape;
  Rng rng(1);
  Var x = tape.constant(testing::random_tensor(Shape{1, 4}, rng));
  const auto seq = run_word_lstm(tape, x, {}, cell.p, Direction::forward).value().data();
  const auto step = lstm_cell_step(tape, x, zero_state(tape, 3), cell.p).h.value().data();
  CHECK(seq == step);
}

TEST_CASE("constant sequences give mirrored outputs across directions") {
  Cell cell(2, 3, 4);
  Tape tape;
  Var xs = tape.constant(Tensor::matrix({{0.3, -0.2}, {0.3, -0.2}, {0.3, -0.2}, {0.3, -0.2}}));
  const Tensor fw = run_word_lstm(tape, xs, {}, cell.p, Direction::forward).value();
  const Tensor bw = run_word_lstm(tape, xs, {}, cell.p, Direction::backward).value();
  for (std::size_t t = 0; t < 4; ++t) CHECK(row(fw, t) == row(bw, 3 - t));
}

TEST_CASE("masked positions emit zeros and leave the state alone") {
  Cell cell(3, 2, 5);
  Rng rng(8);
  const Tensor xs = testing::random_tensor(Shape{5, 3}, rng);
  const std::uint8_t mask[] = {1, 1, 1, 0, 0};
  for (Direction dir : {Direction::forward, Direction::backward}) {
    Tape tape;
    const Tensor masked = run_word_lstm(tape, tape.constant(xs), mask, cell.p, dir).value();
    const Tensor head = run_word_lstm(tape, slice_rows(tape.constant(xs), 0, 3), {}, cell.p, dir).value();
    for (std::size_t t = 0; t < 3; ++t) CHECK(row(masked, t) == row(head, t));
    for (std::size_t t = 3; t < 5; ++t) CHECK(row(masked, t) == std::vector<double>{0.0, 0.0});
  }
  Tape tape;
  const std::uint8_t short_mask[] = {1, 1};
  CHECK_THROWS_AS(run_word_lstm(tape, tape.constant(xs), short_mask, cell.p, Direction::forward),
                  DimensionError);
  CHECK_THROWS_AS(run_word_lstm(tape, tape.constant(Tensor(Shape{0, 3})), {}, cell.p, Direction::forward),
                  ContractError);
}

TEST_CASE("hidden outputs stay inside (-1, 1)") {
  Cell cell(6, 8, 9, 3.0);
  Rng rng(10);
  Tape tape;
  const Tensor out =
      run_word_lstm(tape, tape.constant(testing::random_tensor(Shape{40, 6}, rng, 50.0)), {}, cell.p,
                    Direction::forward)
          .value();
  for (double v : out.values()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("clause representation is the span mean") {
  Tape tape;
  Var states = tape.constant(Tensor::matrix({{9, 9}, {1, 3}, {3, 5}, {7, 7}}));
  CHECK(clause_repr(states, {1, 3}).value().data() == std::vector<double>{2, 4});
  CHECK(clause_repr(states, {3, 4}).value().data() == std::vector<double>{7, 7});
  Var twins = tape.constant(Tensor::matrix({{0.25, -1}, {0.25, -1}}));
  CHECK(clause_repr(twins, {0, 2}).value().data() == std::vector<double>{0.25, -1});
  CHECK_THROWS_AS(clause_repr(states, {2, 2}), ContractError);
}

TEST_CASE("clause fusion scales and concatenates") {
  Tape tape;
  Var b = tape.constant(Tensor::matrix({{2, 2}}));
  Var h = tape.constant(Tensor::matrix({{4}}));
  CHECK(clause_fuse(b, h, 0.5).value().data() == std::vector<double>{1, 1, 2});
  Rng rng(3);
  Var rb = tape.constant(testing::random_tensor(Shape{1, 5}, rng));
  Var rh = tape.constant(testing::random_tensor(Shape{1, 3}, rng));
  const Tensor one = clause_fuse(rb, rh, 1.0).value();
  const Tensor zero = clause_fuse(rb, rh, 0.0).value();
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(one[i] == 0.0);
    CHECK(zero[i] == rb.value()[i]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(zero[5 + i] == 0.0);
    CHECK(one[5 + i] == rh.value()[i]);
  }
  CHECK_THROWS_AS(clause_fuse(b, h, 1.5), ConfigError);
  CHECK_THROWS_AS(clause_fuse(b, h, -0.1), ConfigError);
}

TEST_CASE("clause word hidden picks the last state in iteration order") {
  Tape tape;
  Var words = tape.constant(Tensor::matrix({{0}, {1}, {2}, {3}}));
  CHECK(clause_word_hidden(words, {1, 3}, Direction::forward).value().item() == 2.0);
  CHECK(clause_word_hidden(words, {1, 3}, Direction::backward).value().item() == 1.0);
}

TEST_CASE("sentence features follow the clause count") {
  Tape tape;
  Var h1 = tape.constant(Tensor::matrix({{0.5, 0.5}}));
  const Var one[] = {tape.constant(Tensor::matrix({{1, 1, 1, 1}}))};
  CHECK(assemble_sentence_features(one, h1).id == h1.id);
  const Var three[] = {tape.constant(Tensor::matrix({{1, 1, 1, 1}})),
                       tape.constant(Tensor::matrix({{2, 2, 2, 2}})),
                       tape.constant(Tensor::matrix({{3, 3, 3, 3}}))};
  const Tensor f = assemble_sentence_features(three, h1).value();
  CHECK(f.shape() == Shape{3, 4});
  CHECK(f.at(2, 0) == 3.0);
  const Var twins[] = {three[1], three[1]};
  const Tensor t = assemble_sentence_features(twins, h1).value();
  CHECK(row(t, 0) == row(t, 1));
  CHECK_THROWS_AS(assemble_sentence_features({}, h1), ContractError);
}

TEST_CASE("sentence lstm pads the single-clause branch") {
  Cell cell(6, 3, 6);
  Tape tape;
  Var hw = tape.constant(Tensor::matrix({{0.1, -0.2}}));
  const Tensor padded = run_sentence_lstm(tape, hw, cell.p, Direction::backward, 2).value();
  CHECK(padded.shape() == Shape{1, 3});
  const Tensor explicit_pad =
      run_sentence_lstm(tape, tape.constant(Tensor::matrix({{0, 0, 0, 0, 0.1, -0.2}})), cell.p,
                        Direction::backward)
          .value();
  CHECK(padded.data() == explicit_pad.data());
  CHECK_THROWS_AS(run_sentence_lstm(tape, hw, cell.p, Direction::backward), DimensionError);
  CHECK_THROWS_AS(run_sentence_lstm(tape, tape.constant(Tensor(Shape{2, 2})), cell.p,
                                    Direction::backward, 2),
                  DimensionError);
}

TEST_CASE("sentence lstm output length equals clause count") {
  Cell cell(4, 3, 7);
  Rng rng(2);
  for (std::size_t n : {1u, 2u, 5u}) {
    Tape tape;
    Var f = tape.constant(testing::random_tensor(Shape{n, 4}, rng));
    CHECK(run_sentence_lstm(tape, f, cell.p, Direction::backward).value().row_count() == n);
  }
}

TEST_CASE("reversing clauses and direction reverses the outputs") {
  Cell cell(4, 3, 8);
  Rng rng(4);
  const Tensor f = testing::random_tensor(Shape{4, 4}, rng);
  Tensor reversed(Shape{4, 4});
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) reversed.at(r, c) = f.at(3 - r, c);
  }
  Tape tape;
  const Tensor a = run_sentence_lstm(tape, tape.constant(f), cell.p, Direction::backward).value();
  const Tensor b = run_sentence_lstm(tape, tape.constant(reversed), cell.p, Direction::forward).value();
  for (std::size_t r = 0; r < 4; ++r) CHECK(row(a, r) == row(b, 3 - r));

  Var constant = tape.constant(Tensor::matrix({{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}}));
  const Tensor fw = run_sentence_lstm(tape, constant, cell.p, Direction::forward).value();
  const Tensor bw = run_sentence_lstm(tape, constant, cell.p, Direction::backward).value();
  std::vector<std::vector<double>> fr, br;
  for (std::size_t r = 0; r < 3; ++r) {
    fr.push_back(row(fw, r));
    br.push_back(row(bw, r));
  }
  std::sort(fr.begin(), fr.end());
  std::sort(br.begin(), br.end());
  CHECK(fr == br);
}

TEST_CASE("gradients through the clause chain pass finite-difference checks") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Cell word(4, 3, seed, 0.5, "word");
    Cell sentence(7, 2, seed + 50, 0.5, "sentence");
    ParameterStore inputs;
    Parameter& states = inputs.add("states", Shape{6, 4});
    Rng rng(seed + 7);
    states.tensor = testing::random_tensor(Shape{6, 4}, rng);
    std::vector<Parameter*> params = inputs.all();
    for (Parameter* p : word.store.all()) params.push_back(p);
    for (Parameter* p : sentence.store.all()) params.push_back(p);
    const TokenSpan spans[] = {{1, 3}, {3, 6}};
    const auto report = grad_check(
        [&](Tape& t) {
          Var s = t.parameter(states);
          Var words = run_word_lstm(t, s, {}, word.p, Direction::forward);
          std::vector<Var> fused;
          for (const auto& span : spans) {
            fused.push_back(clause_fuse(clause_repr(s, span),
                                        clause_word_hidden(words, span, Direction::forward), 0.3));
          }
          Var f = assemble_sentence_features(fused, clause_word_hidden(words, spans[0], Direction::forward));
          return probe(t, run_sentence_lstm(t, f, sentence.p, Direction::backward, 3));
        },
        params);
    CHECK(report.relative_error < 1e-4);
    CHECK(report.max_abs_error < 1e-7);
  }
}
