#pragma once

#include <cmath>
#include <random>

#include "jcapt/diff/init.hpp"
#include "jcapt/diff/ops.hpp"
#include "jcapt/diff/tensor.hpp"

namespace testutil {

inline jcapt::diff::Tensor random_tensor(jcapt::diff::Shape shape, jcapt::Rng& rng, double lo = -1.0, double hi = 1.0) {
  jcapt::diff::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.vec()) v = dist(rng);
  return t;
}

inline std::size_t uniform_int(jcapt::Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// sum(y ⊙ W) with a fixed random W: a scalar whose gradient touches
// every element of y with a distinct weight.
inline jcapt::diff::Var weighted_sum(jcapt::diff::Var y, std::uint64_t seed) {
  jcapt::Rng rng(seed);
  auto w = y.tape->constant(random_tensor(y.shape(), rng));
  return jcapt::diff::sum(jcapt::diff::mul(y, w));
}

}  // namespace testutil
