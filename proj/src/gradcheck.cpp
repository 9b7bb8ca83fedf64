#include "dblp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dblp/errors.hpp"

namespace dblp {
namespace {

double evaluate(const Objective& f) {
  Tape tape;
  const double value = f(tape).value().item();
  if (!std::isfinite(value)) throw EvaluationError("grad_check: objective is not finite");
  return value;
}

double relative(double diff_sq, double analytic_sq, double numeric_sq) {
  return std::sqrt(diff_sq) / std::max(1e-8, std::sqrt(analytic_sq) + std::sqrt(numeric_sq));
}

}  // namespace

GradCheckReport grad_check(const Objective& f, std::span<Parameter* const> params, double eps,
                           double tol) {
  if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");
  GradCheckReport report;
  report.tolerance = tol;

  for (Parameter* p : params) {
    if (p->trainable) {
      p->tensor.ensure_grad();
      p->tensor.zero_grad();
    }
  }
  {
    Tape tape;
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) {
      throw EvaluationError("grad_check: objective is not finite");
    }
    tape.backward(loss);
  }

  double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    GradCheckEntry entry{p->name, 0.0, 0.0};
    double d2 = 0.0, a2 = 0.0, n2 = 0.0;
    const std::vector<double> analytic(p->tensor.grad().begin(), p->tensor.grad().end());
    auto values = p->tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + eps;
      const double up = evaluate(f);
      values[i] = original - eps;
      const double down = evaluate(f);
      values[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double diff = analytic[i] - numeric;
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(diff));
      d2 += diff * diff;
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
    entry.relative_error = relative(d2, a2, n2);
    report.max_abs_error = std::max(report.max_abs_error, entry.max_abs_error);
    diff_sq += d2;
    analytic_sq += a2;
    numeric_sq += n2;
    report.entries.push_back(std::move(entry));
    p->tensor.zero_grad();
  }
  report.relative_error = relative(diff_sq, analytic_sq, numeric_sq);
  return report;
}

}  // namespace dblp
