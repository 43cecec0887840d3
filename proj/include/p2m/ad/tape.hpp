#pragma once

#include "p2m/ad/tensor.hpp"

#include <deque>
#include <functional>

namespace p2m::ad {

template <std::floating_point T>
class Tape;

/// Trainable array that outlives any single tape. Gradients from every backward
/// pass that reaches it are summed into `grad` until zero_grad().
template <std::floating_point T>
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor<T> value)
      : name_(std::move(name)), value_(std::move(value)), grad_(value_.shape()) {}

  const std::string& name() const { return name_; }
  Tensor<T>& value() { return value_; }
  const Tensor<T>& value() const { return value_; }
  Tensor<T>& grad() { return grad_; }
  const Tensor<T>& grad() const { return grad_; }
  void zero_grad() { grad_.fill(T(0)); }

 private:
  std::string name_;
  Tensor<T> value_;
  Tensor<T> grad_;
};

/// Handle to a value recorded on a tape.
template <std::floating_point T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const { return tape->requires_grad(id); }
};

/// Reverse-mode differentiation record. Nodes are appended in evaluation order, so
/// a reverse sweep over node ids is a valid topological order.
template <std::floating_point T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}, nullptr); }
  Var<T> variable(Tensor<T> value) { return push(std::move(value), grad_enabled_, {}, nullptr); }
  Var<T> parameter(Parameter<T>& p) { return push(p.value(), grad_enabled_, {}, &p); }

  /// Appends an operation result; `backward` is dropped when no gradient is needed.
  Var<T> record(Tensor<T> value, bool needs_grad, BackwardFn backward) {
    const bool keep = needs_grad && grad_enabled_;
    return push(std::move(value), keep, keep ? std::move(backward) : BackwardFn{}, nullptr);
  }

  const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-allocated on first access.
  Tensor<T>& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() == nodes_[id].value.size(); }

  /// Gradient of the last backward() with respect to `v` (zeros when unreached).
  Tensor<T> gradient(Var<T> v) {
    if (has_grad(v.id)) return nodes_[v.id].grad;
    return Tensor<T>(nodes_[v.id].value.shape());
  }

  /// Backpropagates from a scalar. Parameter gradients are added to Parameter::grad().
  void backward(Var<T> loss) {
    if (loss.tape != this) throw NumericError("backward: variable belongs to a different tape");
    if (value(loss.id).size() != 1) {
      throw NumericError("backward: loss must be scalar, got shape " + shape_string(value(loss.id).shape()));
    }
    for (Node& n : nodes_) n.grad = Tensor<T>();
    grad(loss.id)[0] = T(1);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !has_grad(id)) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param != nullptr) {
        Tensor<T>& acc = n.param->grad();
        const Tensor<T>& g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
      }
    }
  }

  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter<T>* param = nullptr;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn backward, Parameter<T>* param) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, std::move(backward), param});
    return Var<T>{this, nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

/// Disables gradient recording on a tape for the lifetime of the guard.
template <std::floating_point T>
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape<T>& tape) : tape_(tape), previous_(tape.grad_enabled()) { tape_.set_grad_enabled(false); }
  ~NoGradGuard() { tape_.set_grad_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape<T>& tape_;
  bool previous_;
};

}  // namespace p2m::ad
