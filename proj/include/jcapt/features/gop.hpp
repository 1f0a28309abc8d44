#pragma once

#include "jcapt/diff/tensor.hpp"
#include "jcapt/features/phones.hpp"

namespace jcapt::features {

struct GopResult {
  double value = 0.0;
  // A frame gave the canonical phone zero probability; log(1e-10) was used.
  bool clamped = false;
};

inline constexpr double kGopFloor = 1e-10;

// Mean log posterior of the canonical phone over the segment's frames.
// posteriors: T_p×41, each row summing to 1 within 1e-6.
GopResult compute_gop(const diff::Tensor& posteriors, PhoneId canonical);

}  // namespace jcapt::features
