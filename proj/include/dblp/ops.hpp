#pragma once

// Differentiable operations over Tape values.
//
// Row-wise ops treat the last extent as the row width and every leading
// extent as a flattened row index. Vectors produced by reductions are
// 1×n matrices. All operands must live on the same tape.

#include <cstddef>
#include <span>
#include <vector>

#include "dblp/tape.hpp"

namespace dblp {

enum class Activation { sigmoid, tanh };

double sigmoid_scalar(double x);
double gelu_scalar(double x);

/// a[..×k] · b[k×n] -> [..×n]
Var matmul(Var a, Var b);
/// a[m×k] · b[n×k]ᵀ -> [m×n]
Var matmul_nt(Var a, Var b);
/// x[..×in] · weight[out×in]ᵀ (+ bias[out]) -> [..×out]
Var linear(Var x, Var weight);
Var linear(Var x, Var weight, Var bias);

Var add(Var a, Var b);
/// Adds a length-w vector to every row of a[..×w].
Var add_row(Var a, Var row);
Var sub(Var a, Var b);
/// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var activate(Var x, Activation kind);
Var sigmoid(Var x);
Var tanh(Var x);
/// Exact GELU: 0.5·x·(1 + erf(x/√2)).
Var gelu(Var x);

/// Row-wise softmax with max subtraction; -inf entries receive weight 0.
Var softmax_rows(Var x);
/// Row-wise layer normalization followed by the affine map gamma, beta.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-12);

/// Gathers rows of table[V×d]; throws LookupError on an id ≥ V.
Var embedding(Var table, std::span<const std::size_t> ids);

/// Rows [begin, end) of the flattened row view -> [(end-begin)×w]
Var slice_rows(Var x, std::size_t begin, std::size_t end);
/// Columns [begin, end) -> [rows×(end-begin)]
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var reshape(Var x, Shape shape);

/// Column means over rows -> [1×w]
Var mean_rows(Var x);
/// Column maxima over rows -> [1×w]. Gradient flows to the first row
/// attaining each maximum.
Var max_rows(Var x);

/// log(max(x, floor)); zero gradient where the floor is active.
Var log_clamped(Var x, double floor = 1e-12);
Var sum(Var x);
Var sum_squares(Var x);

}  // namespace dblp
