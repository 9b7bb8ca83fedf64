#pragma once

// Max-over-time pooling, the softmax classifier and the L2-regularized
// cross-entropy objective.

#include <cstddef>
#include <span>
#include <vector>

#include "dblp/param_spec.hpp"
#include "dblp/tape.hpp"

namespace dblp {

/// How the cross-entropy term is scaled.
enum class LossPrefactor {
  per_label,  // −(1/m)·Σ y_i log p_i, m = number of labels
  none,       // −Σ y_i log p_i
};

struct HeadParams {
  Parameter* weight = nullptr;  // m×p
  Parameter* bias = nullptr;    // m

  static HeadParams bind(ParameterStore& store, const std::string& prefix = "head");
};

std::vector<ParamSpec> head_param_specs(std::size_t pooled_width, std::size_t num_labels,
                                        const std::string& prefix = "head");

/// Coordinatewise maximum over the rows of H [T×p]: [1×p].
Var max_pool_time(Var sequence);

/// softmax(W·v + b) for v [1×p] (or a stack of rows).
Var class_probs(Tape& tape, Var pooled, const HeadParams& head);

struct LossOptions {
  double phi = 0.0;  // L2 coefficient on weight matrices
  LossPrefactor prefactor = LossPrefactor::per_label;
  double log_floor = 1e-12;
};

/// Mean over rows of the cross-entropy between probs [B×m] and one-hot
/// targets [B×m], plus phi·Σ‖W‖² over `regularized` (rank-2 trainable
/// parameters only; biases and vectors are ignored). Throws ContractError
/// when a target row is not one-hot.
Var classification_loss(Tape& tape, Var probs, const Tensor& targets,
                        std::span<Parameter* const> regularized, const LossOptions& options);

/// One-hot rows for the given labels.
Tensor one_hot(std::span<const std::size_t> labels, std::size_t num_labels);

/// Index of the largest probability; ties go to the lowest index.
std::size_t predict_label(std::span<const double> probs);

}  // namespace dblp
