#include "dblp/tape.hpp"

#include <algorithm>

#include "dblp/errors.hpp"

namespace dblp {

Parameter& ParameterStore::add(std::string name, Shape shape, bool trainable) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  params_.push_back(Parameter{std::move(name), Tensor(std::move(shape)), trainable});
  return params_.back();
}

Parameter* ParameterStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParameterStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParameterStore::get(std::string_view name) {
  if (Parameter* p = find(name)) return *p;
  throw LookupError("unknown parameter: " + std::string(name));
}

const Parameter& ParameterStore::get(std::string_view name) const {
  if (const Parameter* p = find(name)) return *p;
  throw LookupError("unknown parameter: " + std::string(name));
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  Node& node = nodes_.emplace_back();
  node.owned = std::move(value);
  node.value = &node.owned;
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& param) {
  if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) {
    return Var{this, it->second};
  }
  Node& node = nodes_.emplace_back();
  node.value = &param.tensor;
  node.param = &param;
  node.requires_grad = param.trainable;
  const std::size_t id = nodes_.size() - 1;
  param_nodes_.emplace(&param, id);
  return Var{this, id};
}

Var Tape::record(Tensor value, bool needs_grad, BackwardFn backward) {
  Node& node = nodes_.emplace_back();
  node.owned = std::move(value);
  node.value = &node.owned;
  node.requires_grad = needs_grad;
  if (needs_grad) node.backward = std::move(backward);
  return Var{this, nodes_.size() - 1};
}

std::span<double> Tape::adjoint(Var v) {
  Node& node = nodes_[v.id];
  if (!node.requires_grad) return {};
  if (node.grad.empty()) node.grad.assign(node.value->size(), 0.0);
  return node.grad;
}

std::span<const double> Tape::grad(Var v) const { return nodes_[v.id].grad; }

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss recorded on a different tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_string(value(loss.id).shape()));
  }
  for (auto& node : nodes_) node.grad.clear();
  Node& root = nodes_[loss.id];
  if (!root.requires_grad) return;
  root.grad.assign(1, 1.0);

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param != nullptr) {
      Tensor& t = node.param->tensor;
      t.ensure_grad();
      auto g = t.grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += node.grad[j];
    } else if (node.backward) {
      node.backward(*this, node.grad);
    }
  }
}

void Tape::clear() {
  for (auto& [param, id] : param_nodes_) {
    if (param->tensor.has_grad()) param->tensor.zero_grad();
  }
  nodes_.clear();
  param_nodes_.clear();
}

}  // namespace dblp
