#include "jcapt/features/gop.hpp"

#include <cmath>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::features {

GopResult compute_gop(const diff::Tensor& posteriors, PhoneId canonical) {
  if (posteriors.rank() != 2 || posteriors.cols() != kPhoneCount) {
    throw DimensionError(fmt::format("compute_gop: posteriors must be T_p×{}, got {}", kPhoneCount,
                                     diff::shape_str(posteriors.shape())));
  }
  if (canonical >= kPhoneCount) throw InventoryError(fmt::format("compute_gop: phone id {} outside inventory", canonical));
  GopResult result;
  double total = 0.0;
  for (std::size_t t = 0; t < posteriors.rows(); ++t) {
    double row_sum = 0.0;
    for (double p : posteriors.row(t)) row_sum += p;
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw ContractError(fmt::format("compute_gop: frame {} posteriors sum to {}, not 1", t, row_sum));
    }
    double p = posteriors(t, canonical);
    if (p < kGopFloor) {
      p = kGopFloor;
      result.clamped = true;
    }
    total += std::log(p);
  }
  // Rows summing to 1 keep p <= 1 + 1e-6; pin the log at 0 so GOP <= 0.
  result.value = std::min(0.0, total / static_cast<double>(posteriors.rows()));
  return result;
}

}  // namespace jcapt::features
