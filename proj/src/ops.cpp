#include "dblp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dblp/errors.hpp"
#include "dblp/kernels.hpp"

namespace dblp {
namespace {

namespace kn = kernels;

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw ContractError(std::string(op) + ": operands are not on the same tape");
  }
  return *a.tape;
}

Tape& tape_of(Var a, const char* op) {
  if (a.tape == nullptr) throw ContractError(std::string(op) + ": unbound variable");
  return *a.tape;
}

std::string shapes(Var a, Var b) {
  return shape_string(a.shape()) + " and " + shape_string(b.shape());
}

// Shape with the last extent replaced; rank 0 becomes [n].
Shape with_width(const Shape& shape, std::size_t width) {
  Shape out = shape;
  if (out.empty()) return Shape{width};
  out.back() = width;
  return out;
}

std::size_t rank2_rows(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
  return t.shape()[0];
}

template <typename Forward, typename Derivative>
Var unary(Var x, Forward f, Derivative df_from_y_x) {
  Tape& tape = tape_of(x, "unary");
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  // The closure reads this node's own output; its id is the next slot.
  const Var self{&tape, tape.size()};
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, self, df_from_y_x](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       const Tensor& xin = x.value();
                       const Tensor& yout = self.value();
                       for (std::size_t i = 0; i < gx.size(); ++i) {
                         gx[i] += g[i] * df_from_y_x(yout[i], xin[i]);
                       }
                     });
}

}  // namespace

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rank() != 2 || av.rank() == 0 || av.row_width() != bv.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + shapes(a, b));
  }
  const std::size_t m = av.row_count();
  const std::size_t k = av.row_width();
  const std::size_t n = bv.shape()[1];
  Tensor out(with_width(av.shape(), n));
  kn::gemm_nn(av.values().data(), bv.values().data(), out.values().data(), m, k, n);
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(out), needs, [a, b, m, k, n](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint(a); !ga.empty()) {
      kn::gemm_nt(g.data(), b.value().values().data(), ga.data(), m, n, k, true);
    }
    if (auto gb = t.adjoint(b); !gb.empty()) {
      kn::gemm_tn(a.value().values().data(), g.data(), gb.data(), k, m, n, true);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = rank2_rows(av, "matmul_nt");
  const std::size_t n = rank2_rows(bv, "matmul_nt");
  if (av.shape()[1] != bv.shape()[1]) {
    throw DimensionError("matmul_nt: incompatible shapes " + shapes(a, b));
  }
  const std::size_t k = av.shape()[1];
  Tensor out(Shape{m, n});
  kn::gemm_nt(av.values().data(), bv.values().data(), out.values().data(), m, k, n);
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(out), needs, [a, b, m, k, n](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint(a); !ga.empty()) {
      kn::gemm_nn(g.data(), b.value().values().data(), ga.data(), m, n, k, true);
    }
    if (auto gb = t.adjoint(b); !gb.empty()) {
      kn::gemm_tn(g.data(), a.value().values().data(), gb.data(), n, m, k, true);
    }
  });
}

namespace {

Var linear_impl(Var x, Var weight, const Var* bias) {
  Tape& tape = same_tape(x, weight, "linear");
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const std::size_t out_dim = rank2_rows(wv, "linear");
  const std::size_t in_dim = wv.shape()[1];
  if (xv.rank() == 0 || xv.row_width() != in_dim) {
    throw DimensionError("linear: input " + shape_string(xv.shape()) + " does not match weight " +
                         shape_string(wv.shape()));
  }
  if (bias != nullptr) {
    same_tape(x, *bias, "linear");
    if (bias->value().size() != out_dim) {
      throw DimensionError("linear: bias " + shape_string(bias->value().shape()) +
                           " does not match weight " + shape_string(wv.shape()));
    }
  }
  const std::size_t rows = xv.row_count();
  Tensor out(with_width(xv.shape(), out_dim));
  kn::gemm_nt(xv.values().data(), wv.values().data(), out.values().data(), rows, in_dim, out_dim);
  if (bias != nullptr) {
    const auto bv = bias->value().values();
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = out.values().subspan(r * out_dim, out_dim);
      kn::add(row, bv, row);
    }
  }
  bool needs = tape.requires_grad(x) || tape.requires_grad(weight);
  const bool has_bias = bias != nullptr;
  Var b = has_bias ? *bias : Var{};
  if (has_bias) needs = needs || tape.requires_grad(b);
  return tape.record(
      std::move(out), needs,
      [x, weight, b, has_bias, rows, in_dim, out_dim](Tape& t, std::span<const double> g) {
        if (auto gx = t.adjoint(x); !gx.empty()) {
          kn::gemm_nn(g.data(), weight.value().values().data(), gx.data(), rows, out_dim, in_dim,
                      true);
        }
        if (auto gw = t.adjoint(weight); !gw.empty()) {
          kn::gemm_tn(g.data(), x.value().values().data(), gw.data(), out_dim, rows, in_dim, true);
        }
        if (has_bias) {
          if (auto gb = t.adjoint(b); !gb.empty()) {
            for (std::size_t r = 0; r < rows; ++r) {
              kn::add(gb, g.subspan(r * out_dim, out_dim), gb);
            }
          }
        }
      });
}

}  // namespace

Var linear(Var x, Var weight) { return linear_impl(x, weight, nullptr); }
Var linear(Var x, Var weight, Var bias) { return linear_impl(x, weight, &bias); }

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  if (a.shape() != b.shape()) throw DimensionError("add: shape mismatch " + shapes(a, b));
  Tensor out(a.shape());
  kn::add(a.value().values(), b.value().values(), out.values());
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(out), needs, [a, b](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint(a); !ga.empty()) kn::add(ga, g, ga);
    if (auto gb = t.adjoint(b); !gb.empty()) kn::add(gb, g, gb);
  });
}

Var add_row(Var a, Var row) {
  Tape& tape = same_tape(a, row, "add_row");
  const Tensor& av = a.value();
  const std::size_t w = av.row_width();
  if (row.value().size() != w) throw DimensionError("add_row: shape mismatch " + shapes(a, row));
  Tensor out(av.shape());
  const std::size_t rows = av.row_count();
  for (std::size_t r = 0; r < rows; ++r) {
    kn::add(av.values().subspan(r * w, w), row.value().values(), out.values().subspan(r * w, w));
  }
  const bool needs = tape.requires_grad(a) || tape.requires_grad(row);
  return tape.record(std::move(out), needs, [a, row, rows, w](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint(a); !ga.empty()) kn::add(ga, g, ga);
    if (auto gr = t.adjoint(row); !gr.empty()) {
      for (std::size_t r = 0; r < rows; ++r) kn::add(gr, g.subspan(r * w, w), gr);
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  if (a.shape() != b.shape()) throw DimensionError("sub: shape mismatch " + shapes(a, b));
  Tensor out(a.shape());
  const auto av = a.value().values();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(out), needs, [a, b](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint(a); !ga.empty()) kn::add(ga, g, ga);
    if (auto gb = t.adjoint(b); !gb.empty()) kn::axpy(-1.0, g, gb);
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "mul");
  if (a.shape() != b.shape()) throw DimensionError("mul: shape mismatch " + shapes(a, b));
  Tensor out(a.shape());
  kn::mul(a.value().values(), b.value().values(), out.values());
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(out), needs, [a, b](Tape& t, std::span<const double> g) {
    if (auto ga = t.adjoint(a); !ga.empty()) kn::mul_acc(g, b.value().values(), ga);
    if (auto gb = t.adjoint(b); !gb.empty()) kn::mul_acc(g, a.value().values(), gb);
  });
}

Var scale(Var a, double factor) {
  Tape& tape = tape_of(a, "scale");
  Tensor out(a.shape());
  kn::scale(factor, a.value().values(), out.values());
  return tape.record(std::move(out), tape.requires_grad(a),
                     [a, factor](Tape& t, std::span<const double> g) {
                       if (auto ga = t.adjoint(a); !ga.empty()) kn::axpy(factor, g, ga);
                     });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return sigmoid_scalar(v); },
      [](double y, double) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double y, double) { return 1.0 - y * y; });
}

Var gelu(Var x) {
  return unary(
      x, [](double v) { return gelu_scalar(v); },
      [](double, double v) {
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * v * v) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
        return cdf + v * pdf;
      });
}

Var activate(Var x, Activation kind) {
  return kind == Activation::sigmoid ? sigmoid(x) : tanh(x);
}

Var softmax_rows(Var x) {
  Tape& tape = tape_of(x, "softmax_rows");
  const Tensor& in = x.value();
  const std::size_t w = in.row_width();
  if (w == 0) throw DimensionError("softmax_rows: rows must be non-empty");
  const std::size_t rows = in.row_count();
  Tensor out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.values().data() + r * w;
    double* dst = out.values().data() + r * w;
    const double mx = *std::max_element(src, src + w);
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ContractError("softmax_rows: every entry of a row is -inf");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      dst[j] = std::exp(src[j] - mx);
      total += dst[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < w; ++j) dst[j] *= inv;
  }
  const Var y{&tape, tape.size()};
  return tape.record(std::move(out), tape.requires_grad(x), [x, y, rows, w](Tape& t, std::span<const double> g) {
    auto gx = t.adjoint(x);
    const auto p = y.value().values();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * w;
      const double inner = kn::dot(g.subspan(o, w), p.subspan(o, w));
      for (std::size_t j = 0; j < w; ++j) gx[o + j] += p[o + j] * (g[o + j] - inner);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& tape = same_tape(x, gamma, "layer_norm");
  same_tape(x, beta, "layer_norm");
  const Tensor& in = x.value();
  const std::size_t w = in.row_width();
  if (gamma.value().size() != w || beta.value().size() != w) {
    throw DimensionError("layer_norm: affine parameters do not match row width of " +
                         shape_string(in.shape()));
  }
  const std::size_t rows = in.row_count();
  Tensor out(in.shape());
  Tensor xhat(in.shape());
  std::vector<double> inv_std(rows);
  const auto gv = gamma.value().values();
  const auto bv = beta.value().values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.values().data() + r * w;
    double mean = 0.0;
    for (std::size_t j = 0; j < w; ++j) mean += src[j];
    mean /= static_cast<double>(w);
    double var = 0.0;
    for (std::size_t j = 0; j < w; ++j) var += (src[j] - mean) * (src[j] - mean);
    var /= static_cast<double>(w);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < w; ++j) {
      const double h = (src[j] - mean) * inv_std[r];
      xhat[r * w + j] = h;
      out[r * w + j] = h * gv[j] + bv[j];
    }
  }
  const bool needs =
      tape.requires_grad(x) || tape.requires_grad(gamma) || tape.requires_grad(beta);
  return tape.record(std::move(out), needs,
                     [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
                      w](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       auto gg = t.adjoint(gamma);
                       auto gb = t.adjoint(beta);
                       const auto gam = gamma.value().values();
                       std::vector<double> dxhat(w);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t o = r * w;
                         for (std::size_t j = 0; j < w; ++j) {
                           if (!gg.empty()) gg[j] += g[o + j] * xhat[o + j];
                           if (!gb.empty()) gb[j] += g[o + j];
                         }
                         if (gx.empty()) continue;
                         double mean_d = 0.0;
                         double mean_dx = 0.0;
                         for (std::size_t j = 0; j < w; ++j) {
                           dxhat[j] = g[o + j] * gam[j];
                           mean_d += dxhat[j];
                           mean_dx += dxhat[j] * xhat[o + j];
                         }
                         mean_d /= static_cast<double>(w);
                         mean_dx /= static_cast<double>(w);
                         for (std::size_t j = 0; j < w; ++j) {
                           gx[o + j] += inv_std[r] * (dxhat[j] - mean_d - xhat[o + j] * mean_dx);
                         }
                       }
                     });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  Tape& tape = tape_of(table, "embedding");
  const Tensor& tv = table.value();
  const std::size_t vocab = rank2_rows(tv, "embedding");
  const std::size_t d = tv.shape()[1];
  Tensor out(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw LookupError("embedding: id " + std::to_string(ids[i]) + " out of range for table of " +
                        std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.values().data() + ids[i] * d, d, out.values().data() + i * d);
  }
  std::vector<std::size_t> saved(ids.begin(), ids.end());
  return tape.record(std::move(out), tape.requires_grad(table),
                     [table, saved = std::move(saved), d](Tape& t, std::span<const double> g) {
                       auto gt = t.adjoint(table);
                       for (std::size_t i = 0; i < saved.size(); ++i) {
                         kn::add(gt.subspan(saved[i] * d, d), g.subspan(i * d, d),
                                 gt.subspan(saved[i] * d, d));
                       }
                     });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(x, "slice_rows");
  const Tensor& in = x.value();
  const std::size_t w = in.row_width();
  if (begin > end || end > in.row_count()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + shape_string(in.shape()));
  }
  Tensor out(Shape{end - begin, w});
  std::copy_n(in.values().data() + begin * w, (end - begin) * w, out.values().data());
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, begin, w](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x).subspan(begin * w, g.size());
                       kn::add(gx, g, gx);
                     });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(x, "slice_cols");
  const Tensor& in = x.value();
  const std::size_t w = in.row_width();
  if (begin > end || end > w) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + shape_string(in.shape()));
  }
  const std::size_t rows = in.row_count();
  const std::size_t cw = end - begin;
  Tensor out(Shape{rows, cw});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(in.values().data() + r * w + begin, cw, out.values().data() + r * cw);
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, begin, w, cw, rows](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       for (std::size_t r = 0; r < rows; ++r) {
                         auto dst = gx.subspan(r * w + begin, cw);
                         kn::add(dst, g.subspan(r * cw, cw), dst);
                       }
                     });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no operands");
  Tape& tape = tape_of(parts[0], "concat_rows");
  const std::size_t w = parts[0].value().row_width();
  std::size_t rows = 0;
  bool needs = false;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_rows");
    if (p.value().row_width() != w) {
      throw DimensionError("concat_rows: width mismatch " + shapes(parts[0], p));
    }
    rows += p.value().row_count();
    needs = needs || tape.requires_grad(p);
  }
  Tensor out(Shape{rows, w});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.value().size();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return tape.record(std::move(out), needs,
                     [saved = std::move(saved)](Tape& t, std::span<const double> g) {
                       std::size_t o = 0;
                       for (const Var& p : saved) {
                         const std::size_t n = p.value().size();
                         if (auto gp = t.adjoint(p); !gp.empty()) kn::add(gp, g.subspan(o, n), gp);
                         o += n;
                       }
                     });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  Tape& tape = tape_of(parts[0], "concat_cols");
  const std::size_t rows = parts[0].value().row_count();
  std::size_t w = 0;
  bool needs = false;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_cols");
    if (p.value().row_count() != rows) {
      throw DimensionError("concat_cols: row count mismatch " + shapes(parts[0], p));
    }
    w += p.value().row_width();
    needs = needs || tape.requires_grad(p);
  }
  Tensor out(Shape{rows, w});
  std::size_t col = 0;
  for (const Var& p : parts) {
    const std::size_t pw = p.value().row_width();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.value().values().data() + r * pw, pw, out.values().data() + r * w + col);
    }
    col += pw;
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return tape.record(std::move(out), needs,
                     [saved = std::move(saved), rows, w](Tape& t, std::span<const double> g) {
                       std::size_t c = 0;
                       for (const Var& p : saved) {
                         const std::size_t pw = p.value().row_width();
                         if (auto gp = t.adjoint(p); !gp.empty()) {
                           for (std::size_t r = 0; r < rows; ++r) {
                             auto dst = gp.subspan(r * pw, pw);
                             kn::add(dst, g.subspan(r * w + c, pw), dst);
                           }
                         }
                         c += pw;
                       }
                     });
}

Var reshape(Var x, Shape shape) {
  Tape& tape = tape_of(x, "reshape");
  Tensor out = x.value().reshaped(std::move(shape));
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       kn::add(gx, g, gx);
                     });
}

Var mean_rows(Var x) {
  Tape& tape = tape_of(x, "mean_rows");
  const Tensor& in = x.value();
  const std::size_t rows = in.row_count();
  const std::size_t w = in.row_width();
  if (rows == 0) throw ContractError("mean_rows: no rows");
  Tensor out(Shape{1, w});
  for (std::size_t r = 0; r < rows; ++r) kn::add(out.values(), in.values().subspan(r * w, w), out.values());
  const double inv = 1.0 / static_cast<double>(rows);
  for (double& v : out.values()) v *= inv;
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, rows, w, inv](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       for (std::size_t r = 0; r < rows; ++r) kn::axpy(inv, g, gx.subspan(r * w, w));
                     });
}

Var max_rows(Var x) {
  Tape& tape = tape_of(x, "max_rows");
  const Tensor& in = x.value();
  const std::size_t rows = in.row_count();
  const std::size_t w = in.row_width();
  if (rows == 0) throw ContractError("max_rows: no rows");
  Tensor out(Shape{1, w});
  std::vector<std::size_t> argmax(w, 0);
  for (std::size_t j = 0; j < w; ++j) {
    double best = in[j];
    for (std::size_t r = 1; r < rows; ++r) {
      if (in[r * w + j] > best) {
        best = in[r * w + j];
        argmax[j] = r;
      }
    }
    out[j] = best;
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, argmax = std::move(argmax), w](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       for (std::size_t j = 0; j < w; ++j) gx[argmax[j] * w + j] += g[j];
                     });
}

Var log_clamped(Var x, double floor) {
  Tape& tape = tape_of(x, "log_clamped");
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::log(std::max(in[i], floor));
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, floor](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       const auto v = x.value().values();
                       for (std::size_t i = 0; i < gx.size(); ++i) {
                         if (v[i] > floor) gx[i] += g[i] / v[i];
                       }
                     });
}

Var sum(Var x) {
  Tape& tape = tape_of(x, "sum");
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return tape.record(Tensor::scalar(total), tape.requires_grad(x),
                     [x](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       for (double& v : gx) v += g[0];
                     });
}

Var sum_squares(Var x) {
  Tape& tape = tape_of(x, "sum_squares");
  const auto v = x.value().values();
  const double total = kn::dot(v, v);
  return tape.record(Tensor::scalar(total), tape.requires_grad(x),
                     [x](Tape& t, std::span<const double> g) {
                       auto gx = t.adjoint(x);
                       kn::axpy(2.0 * g[0], x.value().values(), gx);
                     });
}

}  // namespace dblp
