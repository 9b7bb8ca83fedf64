#include "dblp/head.hpp"

#include <string>

#include "dblp/errors.hpp"
#include "dblp/ops.hpp"

namespace dblp {

HeadParams HeadParams::bind(ParameterStore& store, const std::string& prefix) {
  return HeadParams{&store.get(prefix + ".weight"), &store.get(prefix + ".bias")};
}

std::vector<ParamSpec> head_param_specs(std::size_t pooled_width, std::size_t num_labels,
                                        const std::string& prefix) {
  return {{prefix + ".weight", {num_labels, pooled_width}, Init::uniform, true},
          {prefix + ".bias", {num_labels}, Init::zeros, true}};
}

Var max_pool_time(Var sequence) {
  if (sequence.value().row_count() == 0) throw ContractError("max_pool_time: empty sequence");
  return max_rows(sequence);
}

Var class_probs(Tape& tape, Var pooled, const HeadParams& head) {
  return softmax_rows(linear(pooled, tape.parameter(*head.weight), tape.parameter(*head.bias)));
}

Tensor one_hot(std::span<const std::size_t> labels, std::size_t num_labels) {
  Tensor t(Shape{labels.size(), num_labels});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_labels) {
      throw LookupError("one_hot: label " + std::to_string(labels[i]) + " out of range");
    }
    t.at(i, labels[i]) = 1.0;
  }
  return t;
}

Var classification_loss(Tape& tape, Var probs, const Tensor& targets,
                        std::span<Parameter* const> regularized, const LossOptions& options) {
  if (probs.shape() != targets.shape() || probs.value().rank() != 2) {
    throw DimensionError("loss: probabilities " + shape_string(probs.shape()) +
                         " and targets " + shape_string(targets.shape()) + " differ");
  }
  if (options.phi < 0.0) throw ConfigError("loss: phi must be non-negative");
  const std::size_t rows = targets.row_count();
  const std::size_t m = targets.row_width();
  if (rows == 0) throw ContractError("loss: empty batch");
  for (std::size_t r = 0; r < rows; ++r) {
    int ones = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = targets.at(r, j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) throw ContractError("loss: target row " + std::to_string(r) + " is not one-hot");
  }
  const double prefactor = options.prefactor == LossPrefactor::per_label
                               ? 1.0 / static_cast<double>(m)
                               : 1.0;
  Var picked = sum(mul(tape.constant(targets), log_clamped(probs, options.log_floor)));
  Var total = scale(picked, -prefactor / static_cast<double>(rows));
  if (options.phi > 0.0) {
    for (Parameter* p : regularized) {
      if (!p->trainable || p->tensor.rank() != 2) continue;
      total = add(total, scale(sum_squares(tape.parameter(*p)), options.phi));
    }
  }
  return total;
}

std::size_t predict_label(std::span<const double> probs) {
  if (probs.empty()) throw ContractError("predict_label: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

}  // namespace dblp
