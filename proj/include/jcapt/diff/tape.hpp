#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <unordered_map>
#include <vector>

#include "jcapt/diff/params.hpp"
#include "jcapt/diff/tensor.hpp"

namespace jcapt::diff {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Receives the output gradient and accumulates into input gradients via
// Tape::accumulate. Inputs that do not need gradients may be skipped.
using BackwardFn = std::function<void(Tape& tape, const Tensor& grad_out)>;

// Records operations in order; backward() walks them in exact reverse.
// One tape per training step; clear() between steps.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Binds a parameter. Repeated binds of the same id return the same leaf.
  Var param(const ParamStore& store, ParamId id);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  // Adds g into the gradient of v (allocating it on first use).
  void accumulate(Var v, const Tensor& g);
  // Mutable gradient buffer for in-place accumulation by fused kernels.
  Tensor& grad_buffer(Var v);

  // Requires a scalar loss. Gradients of all bound parameters that the
  // loss reaches are returned; unreached parameters stay zero/untouched.
  GradientSet backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::optional<ParamId> param;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<ParamId, std::size_t> bound_;
  const ParamStore* store_ = nullptr;
};

}  // namespace jcapt::diff
