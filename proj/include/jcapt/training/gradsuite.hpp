#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jcapt/diff/gradcheck.hpp"

namespace jcapt::training {

struct GradCase {
  std::string name;
  diff::GradCheckResult result;
  std::string worst_param;
  bool passed = false;
};

// Finite-difference checks of every layer and the full tiny model
// (d_model 8, d_state 4, 5 phones, 2 think tokens, both scan modes where
// relevant). Parameters are jittered away from their initial values before
// probing. Uses the five-point stencil at epsilon 3e-4.
std::vector<GradCase> run_grad_suite(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace jcapt::training
