#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jcapt/diff/tape.hpp"
#include "jcapt/diff/tensor.hpp"

namespace jcapt::ssm {

using diff::Tensor;
using diff::Var;

// One step of input-dependent discretization for a diagonal A.
//   a_bar[c,s] = exp(delta[c] * A[c,s])      (zero-order hold)
//   b_bar[c,s] = delta[c] * B_t[s]           (Euler on the input path)
struct Discretized {
  Tensor a_bar;  // channels×state
  Tensor b_bar;  // channels×state
};

Discretized discretize(std::span<const double> delta, const Tensor& a, std::span<const double> b_t);

// Fully discretized inputs to a selective scan.
struct ScanInputs {
  std::size_t steps = 0;
  std::size_t channels = 0;
  std::size_t state = 0;
  std::vector<double> a_bar;  // steps×channels×state
  std::vector<double> b_bar;  // steps×channels×state
  Tensor c;                   // steps×state
  std::vector<double> d;      // channels
  Tensor x;                   // steps×channels

  void validate() const;
};

// Builds ScanInputs from continuous parameters: x T×C, delta T×C (positive),
// a C×S, b T×S, c T×S, d C.
ScanInputs make_scan_inputs(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b, const Tensor& c,
                            std::span<const double> d);

// h_t = a_bar_t ⊙ h_{t-1} + b_bar_t · x_t, h_0 = 0;  y_t = <C_t, h_t> + D ⊙ x_t.
Tensor selective_scan_sequential(const ScanInputs& in);

// Same recurrence evaluated as an associative prefix scan (Blelloch
// up-sweep/down-sweep) over pairs (a, b) with
//   (a2, b2) ∘ (a1, b1) = (a2·a1, a2·b1 + b2).
// Lanes (channel, state) are split across `threads` workers.
Tensor selective_scan_parallel(const ScanInputs& in, unsigned threads = 1);

enum class ScanMode { sequential, parallel };

// Differentiable fused scan. Inputs as in make_scan_inputs; a must be
// strictly negative where the caller relies on stability, delta > 0.
// Gradients flow to every input.
Var selective_scan(Var x, Var delta, Var a, Var b, Var c, Var d, ScanMode mode = ScanMode::sequential);

}  // namespace jcapt::ssm
