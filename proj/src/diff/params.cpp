#include "jcapt/diff/params.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::diff {

ParamId ParamStore::add(std::string name, Tensor value) {
  if (find(name)) throw ContractError(fmt::format("param store: duplicate parameter '{}'", name));
  params_.push_back({std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::optional<ParamId> ParamStore::find(const std::string& name) const {
  for (ParamId i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

ParamId ParamStore::at(const std::string& name) const {
  auto id = find(name);
  if (!id) throw ContractError(fmt::format("param store: no parameter '{}'", name));
  return *id;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::pair<ParamId, std::size_t> ParamStore::locate(std::size_t flat) const {
  for (ParamId i = 0; i < params_.size(); ++i) {
    if (flat < params_[i].value.size()) return {i, flat};
    flat -= params_[i].value.size();
  }
  throw ContractError(fmt::format("param store: flat index out of range"));
}

double& ParamStore::flat(std::size_t i) {
  auto [id, off] = locate(i);
  return params_[id].value[off];
}

bool ParamStore::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](const Parameter& p) { return p.value.all_finite(); });
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value)) return false;
  }
  return true;
}

GradientSet::GradientSet(const ParamStore& store) : touched_(store.size(), false) {
  grads_.reserve(store.size());
  for (const auto& p : store.all()) grads_.emplace_back(p.value.shape(), 0.0);
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (grads_.empty()) {
    *this = other;
    return *this;
  }
  if (other.grads_.size() != grads_.size()) throw ContractError("gradient set: size mismatch in +=");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (!other.touched_[i]) continue;
    auto dst = grads_[i].data();
    auto src = other.grads_[i].data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    touched_[i] = true;
  }
  return *this;
}

GradientSet& GradientSet::scale(double s) {
  for (auto& g : grads_) {
    for (auto& v : g.vec()) v *= s;
  }
  return *this;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& g : grads_) {
    for (double v : g.vec()) m = std::max(m, std::abs(v));
  }
  return m;
}

double GradientSet::max_abs_diff(const GradientSet& other) const {
  if (other.grads_.size() != grads_.size()) throw ContractError("gradient set: size mismatch in comparison");
  double m = 0.0;
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    for (std::size_t k = 0; k < grads_[i].size(); ++k) {
      m = std::max(m, std::abs(grads_[i][k] - other.grads_[i][k]));
    }
  }
  return m;
}

}  // namespace jcapt::diff
