#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "jcapt/diff/init.hpp"
#include "jcapt/diff/params.hpp"
#include "jcapt/diff/tape.hpp"

namespace jcapt::diff {

// Builds a scalar loss on the given tape from the parameters in the store.
using LossBuilder = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;  // flat scalar index into the store
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Central finite differences against the tape's analytic gradient for every
// scalar in the store. Relative error per scalar is
//   |analytic - fd| / max(|analytic|, |fd|, 1e-8)
// and the maximum is reported. epsilon must lie in [1e-6, 1e-3].
// Throws NumericError naming the flat index if a probe is non-finite.
//
// five_point uses the fourth-order central stencil
//   (8[f(x+h) - f(x-h)] - [f(x+2h) - f(x-2h)]) / 12h
// at twice the cost; deep compositions with near-stationary directions
// need it to separate truncation error from real gradient bugs.
enum class Stencil { three_point, five_point };
GradCheckResult grad_check(const LossBuilder& f, ParamStore& params, double epsilon = 1e-4,
                           Stencil stencil = Stencil::three_point);

// Adds independent N(0, sigma²) noise to every parameter. Fresh
// initializations are degenerate probe points (zero biases, unit gains,
// near-zero think tokens under cubic scan terms); checks run after this.
void jitter(ParamStore& params, Rng& rng, double sigma = 0.1);

}  // namespace jcapt::diff
