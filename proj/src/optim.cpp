#include "dblp/optim.hpp"

#include <cmath>

#include "dblp/errors.hpp"
#include "dblp/kernels.hpp"

namespace dblp {

void sgd_step(std::span<Parameter* const> params, double lr) {
  if (!(lr > 0.0)) throw ContractError("sgd_step: learning rate must be positive");
  for (Parameter* p : params) {
    if (p->trainable && !p->tensor.has_grad()) {
      throw ContractError("sgd_step: parameter '" + p->name + "' has no gradient");
    }
  }
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    kernels::axpy(-lr, p->tensor.grad(), p->tensor.values());
    p->tensor.zero_grad();
  }
}

double grad_norm(std::span<Parameter* const> params) {
  double total = 0.0;
  for (Parameter* p : params) {
    if (!p->trainable || !p->tensor.has_grad()) continue;
    total += kernels::dot(p->tensor.grad(), p->tensor.grad());
  }
  return std::sqrt(total);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (Parameter* p : params) {
      if (!p->trainable || !p->tensor.has_grad()) continue;
      kernels::scale(factor, p->tensor.grad(), p->tensor.grad());
    }
  }
  return norm;
}

void init_uniform(Parameter& param, Rng& rng) {
  Tensor& t = param.tensor;
  if (t.rank() != 2) return;
  const double fan_out = static_cast<double>(t.shape()[0]);
  const double fan_in = static_cast<double>(t.shape()[1]);
  const double r = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.values()) v = rng.uniform(-r, r);
}

void init_small(Parameter& param, Rng& rng, double stddev) {
  Tensor& t = param.tensor;
  if (t.rank() != 2) return;
  const double a = stddev * std::sqrt(3.0);
  for (double& v : t.values()) v = rng.uniform(-a, a);
}

}  // namespace dblp
