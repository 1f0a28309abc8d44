#include "jcapt/diff/ops.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::diff {
namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("op on a Var with no tape");
  return *a.tape;
}

void same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, shape_str(a.shape()), shape_str(b.shape())));
  }
}

void require_matrix(const char* op, Var a) {
  if (a.value().rank() != 2) {
    throw DimensionError(fmt::format("{}: expected a matrix, got shape {}", op, shape_str(a.shape())));
  }
}

// C (R×N) += A (R×K) · B (K×N)
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t rows = a.rows(), inner = a.cols(), cols = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double* crow = pc + i * cols;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = pa[i * inner + k];
      if (av == 0.0) continue;
      const double* brow = pb + k * cols;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C (R×K) += G (R×N) · B (K×N)^T
void gemm_nt(const Tensor& g, const Tensor& b, Tensor& c) {
  const std::size_t rows = g.rows(), cols = g.cols(), inner = b.rows();
  const double* pg = g.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* grow = pg + i * cols;
    for (std::size_t k = 0; k < inner; ++k) {
      const double* brow = pb + k * cols;
      double acc = 0.0;
      for (std::size_t j = 0; j < cols; ++j) acc += grow[j] * brow[j];
      pc[i * inner + k] += acc;
    }
  }
}

// C (K×N) += A (R×K)^T · G (R×N)
void gemm_tn(const Tensor& a, const Tensor& g, Tensor& c) {
  const std::size_t rows = a.rows(), inner = a.cols(), cols = g.cols();
  const double* pa = a.data().data();
  const double* pg = g.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* grow = pg + i * cols;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = pa[i * inner + k];
      if (av == 0.0) continue;
      double* crow = pc + k * cols;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += av * grow[j];
    }
  }
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.value().cols() != b.value().rows()) {
    throw DimensionError(
        fmt::format("matmul: inner dimensions differ, {} vs {}", shape_str(a.shape()), shape_str(b.shape())));
  }
  Tensor out = Tensor::matrix(a.value().rows(), b.value().cols());
  gemm_nn(a.value(), b.value(), out);
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) gemm_nt(g, t.value(b), t.grad_buffer(a));
    if (t.needs_grad(b)) gemm_tn(t.value(a), g, t.grad_buffer(b));
  });
}

Var add(Var a, Var b) {
  same_shape("add", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  same_shape("sub", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_shape("mul", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      const Tensor& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = map(a.value(), [s](double v) { return v * s; });
  return tape_of(a).record(std::move(out), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

Var add_bias(Var a, Var bias) {
  if (bias.value().size() != a.value().cols()) {
    throw DimensionError(
        fmt::format("add_bias: bias of shape {} for input {}", shape_str(bias.shape()), shape_str(a.shape())));
  }
  Tensor out = a.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias.value()[c];
  }
  return tape_of(a).record(std::move(out), {a, bias}, [a, bias, rows, cols](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (t.needs_grad(bias)) {
      Tensor& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    }
  });
}

Var mul_cols(Var a, Var v) {
  if (v.value().size() != a.value().cols()) {
    throw DimensionError(
        fmt::format("mul_cols: scale of shape {} for input {}", shape_str(v.shape()), shape_str(a.shape())));
  }
  Tensor out = a.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] *= v.value()[c];
  }
  return tape_of(a).record(std::move(out), {a, v}, [a, v, rows, cols](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& vv = t.value(v);
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r * cols + c] * vv[c];
      }
    }
    if (t.needs_grad(v)) {
      Tensor& gv = t.grad_buffer(v);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gv[c] += g[r * cols + c] * av[r * cols + c];
      }
    }
  });
}

template <class F, class DF>
Var unary(Var a, F f, DF df) {
  Tensor out = map(a.value(), f);
  return tape_of(a).record(std::move(out), {a}, [a, df](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i]);
  });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
      });
}

Var silu(Var a) {
  return unary(
      a, [](double x) { return x * sigmoid(x); },
      [](double x) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x) { return sigmoid(x); });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = x.row(r);
    double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = std::exp(in[c] - mx);
      z += out[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  Tensor probs = out;
  return tape_of(a).record(std::move(out), {a}, [a, probs = std::move(probs), rows, cols](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * probs[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += probs[r * cols + c] * (g[r * cols + c] - dot);
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().vec()) s += v;
  return tape_of(a).record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (auto& v : ga.vec()) v += g[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var mse(Var pred, const Tensor& target) {
  if (pred.value().size() != target.size()) {
    throw DimensionError(fmt::format("mse: prediction {} vs target {}", shape_str(pred.shape()), shape_str(target.shape())));
  }
  const std::size_t n = target.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.value()[i] - target[i];
    s += d * d;
  }
  return tape_of(pred).record(Tensor::scalar(s / static_cast<double>(n)), {pred},
                              [pred, target, n](Tape& t, const Tensor& g) {
                                Tensor& gp = t.grad_buffer(pred);
                                const Tensor& p = t.value(pred);
                                const double k = 2.0 * g[0] / static_cast<double>(n);
                                for (std::size_t i = 0; i < n; ++i) gp[i] += k * (p[i] - target[i]);
                              });
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Tensor& x = logits.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  if (labels.size() != rows) {
    throw DimensionError(fmt::format("cross_entropy: {} labels for logits {}", labels.size(), shape_str(x.shape())));
  }
  Tensor probs(x.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= cols) {
      throw ContractError(fmt::format("cross_entropy: label {} out of range for {} classes", labels[r], cols));
    }
    auto in = x.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      probs[r * cols + c] = std::exp(in[c] - mx);
      z += probs[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) probs[r * cols + c] /= z;
    loss += -(in[labels[r]] - mx - std::log(z));
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return tape_of(logits).record(
      Tensor::scalar(loss / static_cast<double>(rows)), {logits},
      [logits, probs = std::move(probs), lab = std::move(lab), rows, cols](Tape& t, const Tensor& g) {
        Tensor& gl = t.grad_buffer(logits);
        const double k = g[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            gl[r * cols + c] += k * (probs[r * cols + c] - (c == lab[r] ? 1.0 : 0.0));
          }
        }
      });
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.value().size()) {
    throw DimensionError(fmt::format("reshape: cannot view {} as {}", shape_str(a.shape()), shape_str(shape)));
  }
  Tensor out(std::move(shape), a.value().vec());
  return tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var concat_cols(Var a, Var b) {
  require_matrix("concat_cols", a);
  require_matrix("concat_cols", b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows()) {
    throw DimensionError(fmt::format("concat_cols: row counts differ, {} vs {}", shape_str(x.shape()), shape_str(y.shape())));
  }
  const std::size_t rows = x.rows(), ca = x.cols(), cb = y.cols();
  Tensor out = Tensor::matrix(rows, ca + cb);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.row(r).begin(), ca, out.row(r).begin());
    std::copy_n(y.row(r).begin(), cb, out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return tape_of(a).record(std::move(out), {a, b}, [a, b, rows, ca, cb](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += g[r * (ca + cb) + c];
      }
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] += g[r * (ca + cb) + ca + c];
      }
    }
  });
}

Var concat_rows(Var a, Var b) {
  require_matrix("concat_rows", a);
  require_matrix("concat_rows", b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.cols()) {
    throw DimensionError(fmt::format("concat_rows: column counts differ, {} vs {}", shape_str(x.shape()), shape_str(y.shape())));
  }
  std::vector<double> data = x.vec();
  data.insert(data.end(), y.vec().begin(), y.vec().end());
  const std::size_t na = x.size();
  Tensor out({x.rows() + y.rows(), x.cols()}, std::move(data));
  return tape_of(a).record(std::move(out), {a, b}, [a, b, na](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", a);
  const Tensor& x = a.value();
  if (begin >= end || end > x.rows()) {
    throw DimensionError(fmt::format("slice_rows: range [{}, {}) invalid for {}", begin, end, shape_str(x.shape())));
  }
  const std::size_t cols = x.cols();
  std::vector<double> data(x.vec().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           x.vec().begin() + static_cast<std::ptrdiff_t>(end * cols));
  Tensor out({end - begin, cols}, std::move(data));
  return tape_of(a).record(std::move(out), {a}, [a, begin, cols](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin * cols + i] += g[i];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", a);
  const Tensor& x = a.value();
  if (begin >= end || end > x.cols()) {
    throw DimensionError(fmt::format("slice_cols: range [{}, {}) invalid for {}", begin, end, shape_str(x.shape())));
  }
  const std::size_t rows = x.rows(), cols = x.cols(), w = end - begin;
  Tensor out = Tensor::matrix(rows, w);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = x[r * cols + begin + c];
  }
  return tape_of(a).record(std::move(out), {a}, [a, begin, rows, cols, w](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) ga[r * cols + begin + c] += g[r * w + c];
    }
  });
}

Var reverse_rows(Var a) {
  require_matrix("reverse_rows", a);
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.row(rows - 1 - r).begin(), cols, out.row(r).begin());
  return tape_of(a).record(std::move(out), {a}, [a, rows, cols](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) ga[(rows - 1 - r) * cols + c] += g[r * cols + c];
    }
  });
}

Var segment_mean(Var a, const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
  require_matrix("segment_mean", a);
  const Tensor& x = a.value();
  const std::size_t cols = x.cols();
  if (spans.empty()) throw DimensionError("segment_mean: no spans");
  Tensor out = Tensor::matrix(spans.size(), cols);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    auto [b, e] = spans[s];
    if (b >= e || e > x.rows()) {
      throw DimensionError(fmt::format("segment_mean: span [{}, {}) invalid for {}", b, e, shape_str(x.shape())));
    }
    const double inv = 1.0 / static_cast<double>(e - b);
    for (std::size_t r = b; r < e; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] += x[r * cols + c] * inv;
    }
  }
  return tape_of(a).record(std::move(out), {a}, [a, spans, cols](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      auto [b, e] = spans[s];
      const double inv = 1.0 / static_cast<double>(e - b);
      for (std::size_t r = b; r < e; ++r) {
        for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[s * cols + c] * inv;
      }
    }
  });
}

Var rms_norm(Var x, Var gain, double eps) {
  require_matrix("rms_norm", x);
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().size() != cols) {
    throw DimensionError(fmt::format("rms_norm: input {}, gain {}", shape_str(xv.shape()), shape_str(gain.shape())));
  }
  const Tensor& gv = gain.value();
  std::vector<double> inv(rows);
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double ms = 0.0;
    for (std::size_t c = 0; c < cols; ++c) ms += xv(r, c) * xv(r, c);
    inv[r] = 1.0 / std::sqrt(ms / static_cast<double>(cols) + eps);
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = xv(r, c) * inv[r] * gv[c];
  }
  return tape_of(x).record(std::move(out), {x, gain}, [x, gain, inv = std::move(inv), rows, cols](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& gv = t.value(gain);
    if (t.needs_grad(gain)) {
      Tensor& gg = t.grad_buffer(gain);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gg[c] += g(r, c) * xv(r, c) * inv[r];
      }
    }
    if (t.needs_grad(x)) {
      Tensor& gx = t.grad_buffer(x);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g(r, c) * gv[c] * xv(r, c);
        const double k = dot * inv[r] * inv[r] * inv[r] / static_cast<double>(cols);
        for (std::size_t c = 0; c < cols; ++c) gx(r, c) += g(r, c) * gv[c] * inv[r] - xv(r, c) * k;
      }
    }
  });
}

Var causal_depthwise_conv(Var x, Var kernel, Var bias) {
  require_matrix("causal_depthwise_conv", x);
  require_matrix("causal_depthwise_conv", kernel);
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  const std::size_t steps = xv.rows(), ch = xv.cols(), width = kv.rows();
  if (kv.cols() != ch || bias.value().size() != ch) {
    throw DimensionError(fmt::format("causal_depthwise_conv: input {}, kernel {}, bias {}", shape_str(xv.shape()),
                                     shape_str(kv.shape()), shape_str(bias.shape())));
  }
  Tensor out = Tensor::matrix(steps, ch);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t c = 0; c < ch; ++c) out[t * ch + c] = bias.value()[c];
    for (std::size_t k = 0; k < width; ++k) {
      // tap k looks back (width - 1 - k) steps
      const std::size_t lag = width - 1 - k;
      if (lag > t) continue;
      const std::size_t src = t - lag;
      for (std::size_t c = 0; c < ch; ++c) out[t * ch + c] += kv[k * ch + c] * xv[src * ch + c];
    }
  }
  return tape_of(x).record(std::move(out), {x, kernel, bias},
                           [x, kernel, bias, steps, ch, width](Tape& tp, const Tensor& g) {
                             const Tensor& xv = tp.value(x);
                             const Tensor& kv = tp.value(kernel);
                             const bool gx = tp.needs_grad(x), gk = tp.needs_grad(kernel);
                             Tensor* dx = gx ? &tp.grad_buffer(x) : nullptr;
                             Tensor* dk = gk ? &tp.grad_buffer(kernel) : nullptr;
                             for (std::size_t t = 0; t < steps; ++t) {
                               for (std::size_t k = 0; k < width; ++k) {
                                 const std::size_t lag = width - 1 - k;
                                 if (lag > t) continue;
                                 const std::size_t src = t - lag;
                                 for (std::size_t c = 0; c < ch; ++c) {
                                   const double gv = g[t * ch + c];
                                   if (dx) (*dx)[src * ch + c] += gv * kv[k * ch + c];
                                   if (dk) (*dk)[k * ch + c] += gv * xv[src * ch + c];
                                 }
                               }
                             }
                             if (tp.needs_grad(bias)) {
                               Tensor& db = tp.grad_buffer(bias);
                               for (std::size_t t = 0; t < steps; ++t) {
                                 for (std::size_t c = 0; c < ch; ++c) db[c] += g[t * ch + c];
                               }
                             }
                           });
}

}  // namespace jcapt::diff
