#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dblp/tensor.hpp"

namespace dblp {

/// A named model tensor. Frozen parameters (trainable == false) never
/// receive gradients and are never touched by the optimizer.
struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

/// Ordered parameter collection with stable element addresses.
class ParameterStore {
 public:
  Parameter& add(std::string name, Shape shape, bool trainable = true);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Pointers to every parameter, in registration order.
  std::vector<Parameter*> all();

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode differentiation record.
///
/// Each recorded node owns its forward value and a closure that, given the
/// node's adjoint, accumulates into the adjoints of its inputs. Parameters
/// enter as leaves; after backward() their adjoints are added into
/// Parameter::tensor.grad. Nodes that depend on no trainable parameter are
/// skipped during the reverse sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::span<const double> out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape() = default;

  Var constant(Tensor value);
  /// Leaf for a parameter; repeated calls with the same parameter return
  /// the same node.
  Var parameter(Parameter& param);
  /// Records an op result. `needs_grad` should be true iff any input does.
  Var record(Tensor value, bool needs_grad, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return *nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Adjoint buffer of v for accumulation, allocated on first use. Empty
  /// when v does not require a gradient.
  std::span<double> adjoint(Var v);
  /// Adjoint of v after backward(); empty if none was propagated.
  std::span<const double> grad(Var v) const;

  /// Propagates d(loss)/d(node) to every reachable node and accumulates
  /// parameter gradients. `loss` must hold exactly one value.
  void backward(Var loss);

  /// Drops every node and zeroes the gradients of parameters seen by this tape.
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* value = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
};

}  // namespace dblp
