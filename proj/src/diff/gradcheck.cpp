#include "jcapt/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::diff {
namespace {

double evaluate(const LossBuilder& f, const ParamStore& params, std::size_t probe) {
  Tape tape;
  const double v = f(tape, params).value().item();
  if (!std::isfinite(v)) throw NumericError(fmt::format("grad_check: non-finite loss probing flat index {}", probe));
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& f, ParamStore& params, double epsilon, Stencil stencil) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw ContractError(fmt::format("grad_check: epsilon {} outside [1e-6, 1e-3]", epsilon));
  }
  GradientSet analytic;
  {
    Tape tape;
    Var loss = f(tape, params);
    if (!std::isfinite(loss.value().item())) throw NumericError("grad_check: non-finite loss at the base point");
    analytic = tape.backward(loss);
  }

  GradCheckResult result;
  std::size_t flat = 0;
  for (ParamId id = 0; id < params.size(); ++id) {
    for (std::size_t k = 0; k < params[id].value.size(); ++k, ++flat) {
      double& slot = params[id].value[k];
      const double saved = slot;
      auto at = [&](double offset) {
        slot = saved + offset;
        const double v = evaluate(f, params, flat);
        slot = saved;
        return v;
      };
      double fd = (at(epsilon) - at(-epsilon)) / (2.0 * epsilon);
      if (stencil == Stencil::five_point) {
        fd = (4.0 * fd - (at(2.0 * epsilon) - at(-2.0 * epsilon)) / (4.0 * epsilon)) / 3.0;
      }
      const double an = analytic.size() ? analytic[id][k] : 0.0;
      if (!std::isfinite(an)) throw NumericError(fmt::format("grad_check: non-finite analytic gradient at flat index {}", flat));
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
      if (result.checked == 0 || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_index = flat;
        result.analytic = an;
        result.numeric = fd;
      }
      ++result.checked;
    }
  }
  return result;
}

void jitter(ParamStore& params, Rng& rng, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  for (ParamId id = 0; id < params.size(); ++id) {
    for (auto& v : params[id].value.vec()) v += noise(rng);
  }
}

}  // namespace jcapt::diff
