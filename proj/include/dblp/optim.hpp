#pragma once

#include <span>

#include "dblp/rng.hpp"
#include "dblp/tape.hpp"

namespace dblp {

/// values ← values − lr·grad for every trainable parameter, then clears
/// gradients. Frozen parameters are left untouched. Throws ContractError
/// when lr ≤ 0 or a trainable parameter has no gradient slot.
void sgd_step(std::span<Parameter* const> params, double lr);

/// Global L2 norm over the gradients of trainable parameters.
double grad_norm(std::span<Parameter* const> params);

/// Rescales trainable gradients so their global norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

/// Uniform(−r, r) with r = sqrt(6 / (fan_in + fan_out)) for matrices
/// [fan_out × fan_in]; biases and other rank-1 tensors are left as they are.
void init_uniform(Parameter& param, Rng& rng);

/// Uniform(−a, a) with a = stddev·√3 for every entry of a matrix;
/// rank-1 tensors are left as they are.
void init_small(Parameter& param, Rng& rng, double stddev = 0.02);

}  // namespace dblp
