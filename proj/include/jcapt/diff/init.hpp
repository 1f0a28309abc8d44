#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "jcapt/diff/tensor.hpp"

namespace jcapt {

// One engine type across the project so seeded runs are reproducible.
using Rng = std::mt19937_64;

namespace diff {

// Uniform in ±sqrt(6 / fan_in), He-style.
inline Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.vec()) v = dist(rng);
  return t;
}

// Uniform in ±1/sqrt(fan_in).
inline Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.vec()) v = dist(rng);
  return t;
}

inline Tensor normal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.vec()) v = dist(rng);
  return t;
}

}  // namespace diff
}  // namespace jcapt
