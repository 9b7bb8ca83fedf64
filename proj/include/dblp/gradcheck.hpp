#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dblp/tape.hpp"

namespace dblp {

/// Relative error of gradient vectors a (reverse mode) and n (central
/// differences): ‖a − n‖₂ / max(1e-8, ‖a‖₂ + ‖n‖₂).
struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;
  double max_abs_error = 0.0;  // largest |a_i − n_i|
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // trainable parameters only
  /// Over all checked parameters as one vector.
  double relative_error = 0.0;
  double max_abs_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return relative_error < tolerance; }
};

/// Builds a scalar objective on the given tape.
using Objective = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients against central differences
/// (f(θ+eps) − f(θ−eps)) / (2·eps). Frozen parameters are skipped.
/// Parameter gradients are left zeroed on return.
GradCheckReport grad_check(const Objective& f, std::span<Parameter* const> params,
                           double eps = 1e-5, double tol = 1e-4);

}  // namespace dblp
