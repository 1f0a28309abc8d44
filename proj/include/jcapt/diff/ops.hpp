#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "jcapt/diff/tape.hpp"

// Differentiable primitives. All operate on rank-1/rank-2 tensors recorded
// on the inputs' tape; shape errors throw DimensionError naming the op.
namespace jcapt::diff {

// (R×K)·(K×C) → R×C
Var matmul(Var a, Var b);
// Same-shape elementwise ops.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// a: R×C plus bias of length C on every row.
Var add_bias(Var a, Var bias);
// a: R×C scaled column-wise by v of length C.
Var mul_cols(Var a, Var v);

Var tanh(Var a);
Var silu(Var a);
Var softplus(Var a);
Var exp(Var a);
// Row-wise softmax with max subtraction.
Var softmax(Var a);

Var sum(Var a);
Var mean(Var a);
// mean((pred - target)^2) over all elements; target is not differentiated.
Var mse(Var pred, const Tensor& target);
// Mean over rows of -log softmax(logits)[row, label].
Var cross_entropy(Var logits, std::span<const std::size_t> labels);

// Structural ops.
Var reshape(Var a, Shape shape);
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var reverse_rows(Var a);
// Row means over contiguous [begin, end) spans → one row per span.
Var segment_mean(Var a, const std::vector<std::pair<std::size_t, std::size_t>>& spans);

// Row-wise x / sqrt(mean(x²) + eps) scaled column-wise by gain (length C).
Var rms_norm(Var x, Var gain, double eps = 1e-6);

// Depthwise causal convolution over time: x T×C, kernel W×C, bias C.
// y[t,c] = bias[c] + sum_k kernel[k,c] * x[t-(W-1)+k, c], zero left padding.
Var causal_depthwise_conv(Var x, Var kernel, Var bias);

}  // namespace jcapt::diff
