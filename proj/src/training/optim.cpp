#include "jcapt/training/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::training {

void Sgd::step(ParamStore& store, const GradientSet& grads) {
  for (diff::ParamId id = 0; id < store.size(); ++id) {
    if (!grads.touched(id)) continue;
    auto p = store[id].value.data();
    auto g = grads[id].data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
  }
}

void Adam::step(ParamStore& store, const GradientSet& grads) {
  if (m_.empty()) {
    for (const auto& p : store.all()) {
      m_.emplace_back(p.value.shape(), 0.0);
      v_.emplace_back(p.value.shape(), 0.0);
    }
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (diff::ParamId id = 0; id < store.size(); ++id) {
    if (!grads.touched(id)) continue;
    auto p = store[id].value.data();
    auto g = grads[id].data();
    auto m = m_[id].data();
    auto v = v_[id].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError(fmt::format("unknown optimizer '{}' (expected adam or sgd)", name));
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double lr) {
  if (kind == OptimizerKind::sgd) return std::make_unique<Sgd>(lr);
  return std::make_unique<Adam>(lr);
}

}  // namespace jcapt::training
