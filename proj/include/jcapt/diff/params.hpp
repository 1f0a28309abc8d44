#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "jcapt/diff/tensor.hpp"

namespace jcapt::diff {

using ParamId = std::size_t;

struct Parameter {
  std::string name;
  Tensor value;
};

// Owns every learnable tensor of a model. Parameters are addressed by a
// dense id; flat_index() gives a single address space over all scalars so
// gradient checks and optimizers can walk the whole model.
class ParamStore {
 public:
  ParamId add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_[id]; }
  const Parameter& operator[](ParamId id) const { return params_[id]; }
  const std::vector<Parameter>& all() const { return params_; }

  std::optional<ParamId> find(const std::string& name) const;
  ParamId at(const std::string& name) const;

  std::size_t scalar_count() const;
  // Maps a flat scalar index to (param id, offset within the param).
  std::pair<ParamId, std::size_t> locate(std::size_t flat) const;
  double& flat(std::size_t i);

  bool all_finite() const;
  friend bool operator==(const ParamStore&, const ParamStore&);

 private:
  std::vector<Parameter> params_;
};

// Gradients keyed by ParamId, produced by Tape::backward. Kept apart from
// the ParamStore so several tapes can run against shared read-only params.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const ParamStore& store);

  std::size_t size() const { return grads_.size(); }
  Tensor& operator[](ParamId id) { return grads_[id]; }
  const Tensor& operator[](ParamId id) const { return grads_[id]; }
  bool touched(ParamId id) const { return touched_[id]; }
  void mark(ParamId id) { touched_[id] = true; }

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& scale(double s);
  double max_abs() const;
  double max_abs_diff(const GradientSet& other) const;

 private:
  std::vector<Tensor> grads_;
  std::vector<bool> touched_;
};

}  // namespace jcapt::diff
