#include <cmath>
#include <set>

#include "doctest.h"
#include "dblp/errors.hpp"
#include "dblp/gradcheck.hpp"
#include "dblp/ops.hpp"
#include "dblp/optim.hpp"
#include "dblp/param_spec.hpp"
#include "dblp/rng.hpp"
#include "dblp/tape.hpp"
#include "support.hpp"

using namespace dblp;

TEST_CASE("tensor size must match its shape") {
  CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<double>(5)), DimensionError);
  Tensor t(Shape{2, 3});
  CHECK(t.size() == 6);
  CHECK(t.row_width() == 3);
  CHECK(t.row_count() == 2);
  CHECK_FALSE(t.has_grad());
  t.ensure_grad();
  CHECK(t.grad().size() == t.size());
  CHECK(Tensor::scalar(4.0).item() == 4.0);
  CHECK(Tensor::scalar(4.0).rank() == 0);
  CHECK_THROWS_AS(t.item(), ContractError);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
  CHECK_THROWS_AS(t.reshaped(Shape{4}), DimensionError);
  CHECK(t.reshaped(Shape{3, 2}).shape() == Shape{3, 2});
}

TEST_CASE("rng draws are reproducible and in range") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(42).next_u64() != c.next_u64());
  // First output of the standard 64-bit Mersenne Twister seeded with 5489.
  CHECK(Rng(5489).next_u64() == 14514284786278117030ULL);
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  std::vector<int> items{1, 2, 3, 4, 5, 6};
  Rng s(9);
  s.shuffle(std::span(items));
  CHECK(std::multiset<int>(items.begin(), items.end()) == std::multiset<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("parameter store rejects duplicates and unknown names") {
  ParameterStore store;
  store.add("w", Shape{2, 2});
  CHECK_THROWS_AS(store.add("w", Shape{1}), ConfigError);
  CHECK_THROWS_AS(store.get("missing"), LookupError);
  CHECK(store.find("missing") == nullptr);
  CHECK(&store.get("w") == store.find("w"));
}

TEST_CASE("backward populates gradients of reachable parameters") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{1, 2});
  Parameter& unused = store.add("unused", Shape{1, 2});
  w.tensor[0] = 3.0;
  w.tensor[1] = -2.0;
  Tape tape;
  // loss = sum(w ∘ w) → grad 2w
  Var pw = tape.parameter(w);
  CHECK(tape.parameter(w).id == pw.id);
  tape.backward(sum(mul(pw, pw)));
  CHECK(w.tensor.grad()[0] == 6.0);
  CHECK(w.tensor.grad()[1] == -4.0);
  CHECK_FALSE(unused.tensor.has_grad());
  tape.clear();
  CHECK(w.tensor.grad()[0] == 0.0);
  CHECK(tape.size() == 0);
}

TEST_CASE("backward rejects non-scalar losses and foreign tapes") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{1, 2});
  Tape a, b;
  Var v = a.parameter(w);
  CHECK_THROWS_AS(a.backward(v), ContractError);
  CHECK_THROWS_AS(b.backward(sum(v)), ContractError);
}

TEST_CASE("frozen parameters receive no gradient and never move") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{1, 3});
  Parameter& f = store.add("f", Shape{1, 3}, false);
  Rng rng(2);
  testing::randomize(store, rng);
  const auto frozen_before = f.tensor.data();
  for (int step = 0; step < 5; ++step) {
    Tape tape;
    tape.backward(sum(mul(tape.parameter(w), tape.parameter(f))));
    CHECK_FALSE(f.tensor.has_grad());
    auto params = store.all();
    sgd_step(params, 0.1);
  }
  CHECK(f.tensor.data() == frozen_before);
}

TEST_CASE("sgd step moves against the gradient and zeroes it") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{2});
  w.tensor[0] = 1.0;
  w.tensor[1] = -1.0;
  auto params = store.all();
  CHECK_THROWS_AS(sgd_step(params, 0.1), ContractError);
  Tape tape;
  tape.backward(sum_squares(tape.parameter(w)));
  CHECK_THROWS_AS(sgd_step(params, 0.0), ContractError);
  sgd_step(params, 0.25);
  CHECK(w.tensor[0] == 0.5);
  CHECK(w.tensor[1] == -0.5);
  CHECK(w.tensor.grad()[0] == 0.0);
}

TEST_CASE("gradient clipping rescales to the requested norm") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{2});
  w.tensor.ensure_grad();
  w.tensor.grad()[0] = 3.0;
  w.tensor.grad()[1] = 4.0;
  auto params = store.all();
  CHECK(clip_grad_norm(params, 1.0) == doctest::Approx(5.0));
  CHECK(grad_norm(params) == doctest::Approx(1.0));
  CHECK(clip_grad_norm(params, 2.0) == doctest::Approx(1.0));
  CHECK(grad_norm(params) == doctest::Approx(1.0));
}

TEST_CASE("uniform initialization respects the fan bound") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{30, 20});
  Rng rng(4);
  init_uniform(w, rng);
  const double r = std::sqrt(6.0 / 50.0);
  double lo = 1, hi = -1;
  for (double v : w.tensor.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -r);
  CHECK(hi <= r);
  CHECK(hi - lo > r);
}

TEST_CASE("grad_check detects a wrong backward rule") {
  ParameterStore store;
  Parameter& w = store.add("w", Shape{1, 3});
  Rng rng(8);
  testing::randomize(store, rng);
  auto params = store.all();
  const auto good = grad_check([&](Tape& t) { return sum(tanh(t.parameter(w))); }, params);
  CHECK(good.passed());
  CHECK(good.entries.size() == 1);

  // Backward claims d/dx x² = x instead of 2x.
  const auto bad = grad_check(
      [&](Tape& t) {
        Var x = t.parameter(w);
        const Tensor& xv = x.value();
        Tensor out(xv.shape());
        for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * xv[i];
        Var y = t.record(std::move(out), true, [x](Tape& tape, std::span<const double> g) {
          auto ax = tape.adjoint(x);
          for (std::size_t i = 0; i < g.size(); ++i) ax[i] += g[i] * x.value()[i];
        });
        return sum(y);
      },
      params);
  CHECK_FALSE(bad.passed());
  CHECK_FALSE((w.tensor.has_grad() && w.tensor.grad()[0] != 0.0));
}

TEST_CASE("count_params sums tensor sizes") {
  ParameterStore store;
  store.add("embeddings.token", Shape{10, 4});
  CHECK(count_params(store) == ParamCount{40, 40});
  store.add("frozen", Shape{3}, false);
  CHECK(count_params(store) == ParamCount{43, 40});
  const std::vector<ParamSpec> specs{{"a", {2, 3}, Init::uniform, true},
                                     {"b", {5}, Init::zeros, false}};
  CHECK(count_params(specs) == ParamCount{11, 6});
}
