#include "jcapt/diff/tape.hpp"

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::diff {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(const ParamStore& store, ParamId id) {
  if (store_ != nullptr && store_ != &store) {
    throw ContractError("tape: parameters from two different stores bound to one tape");
  }
  store_ = &store;
  if (auto it = bound_.find(id); it != bound_.end()) return Var{this, it->second};
  Node n;
  n.value = store[id].value;
  n.needs_grad = true;
  n.param = id;
  Var v = push(std::move(n));
  bound_.emplace(id, v.id);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape != this) throw ContractError("tape: input recorded on a different tape");
    n.inputs.push_back(in.id);
    n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (g.size() != n.value.size()) {
    throw DimensionError(fmt::format("tape: gradient of shape {} for value of shape {}", shape_str(g.shape()),
                                     shape_str(n.value.shape())));
  }
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), g.vec());
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

GradientSet Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss recorded on a different tape");
  if (nodes_.empty()) throw ContractError("backward: empty tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ContractError(
        fmt::format("backward: loss must be scalar, got shape {}", shape_str(nodes_[loss.id].value.shape())));
  }
  GradientSet grads = store_ ? GradientSet(*store_) : GradientSet();
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  accumulate(loss, Tensor::scalar(1.0));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.param) {
      grads[*n.param] = n.grad;
      grads.mark(*n.param);
    } else if (n.backward) {
      n.backward(*this, n.grad);
    }
  }
  return grads;
}

void Tape::clear() {
  nodes_.clear();
  bound_.clear();
  store_ = nullptr;
}

}  // namespace jcapt::diff
