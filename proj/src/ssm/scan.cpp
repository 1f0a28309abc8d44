#include "jcapt/ssm/scan.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::ssm {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(fmt::format("selective scan: {}", what));
}

// All hidden states h[t,c,s] by the direct recurrence.
std::vector<double> states_sequential(const ScanInputs& in) {
  const std::size_t cs = in.channels * in.state;
  std::vector<double> h(in.steps * cs, 0.0);
  for (std::size_t t = 0; t < in.steps; ++t) {
    const double* a = in.a_bar.data() + t * cs;
    const double* b = in.b_bar.data() + t * cs;
    double* cur = h.data() + t * cs;
    const double* prev = t > 0 ? h.data() + (t - 1) * cs : nullptr;
    for (std::size_t c = 0; c < in.channels; ++c) {
      const double xv = in.x[t * in.channels + c];
      for (std::size_t s = 0; s < in.state; ++s) {
        const std::size_t k = c * in.state + s;
        cur[k] = (prev ? a[k] * prev[k] : 0.0) + b[k] * xv;
      }
    }
  }
  return h;
}

// Work-efficient exclusive scan per lane, then one combine to make it
// inclusive. Lanes [lane_begin, lane_end) of the channel×state grid.
void scan_lanes(const ScanInputs& in, std::size_t lane_begin, std::size_t lane_end, std::vector<double>& h) {
  const std::size_t steps = in.steps;
  const std::size_t cs = in.channels * in.state;
  std::size_t n = 1;
  while (n < steps) n <<= 1;
  std::vector<double> pa(n), pb(n);
  for (std::size_t lane = lane_begin; lane < lane_end; ++lane) {
    const std::size_t c = lane / in.state;
    for (std::size_t t = 0; t < n; ++t) {
      if (t < steps) {
        pa[t] = in.a_bar[t * cs + lane];
        pb[t] = in.b_bar[t * cs + lane] * in.x[t * in.channels + c];
      } else {
        pa[t] = 1.0;
        pb[t] = 0.0;
      }
    }
    // Up-sweep: node i absorbs its left sibling (earlier in time).
    for (std::size_t stride = 1; stride < n; stride <<= 1) {
      for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
        const std::size_t j = i - stride;
        pb[i] = pa[i] * pb[j] + pb[i];
        pa[i] = pa[i] * pa[j];
      }
    }
    // Down-sweep to exclusive prefixes; identity at the root.
    pa[n - 1] = 1.0;
    pb[n - 1] = 0.0;
    for (std::size_t stride = n >> 1; stride >= 1; stride >>= 1) {
      for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
        const std::size_t j = i - stride;
        const double la = pa[j], lb = pb[j];
        pa[j] = pa[i];
        pb[j] = pb[i];
        // right prefix = left subtree total applied after the parent prefix
        pb[i] = la * pb[i] + lb;
        pa[i] = la * pa[i];
      }
    }
    for (std::size_t t = 0; t < steps; ++t) {
      h[t * cs + lane] = in.a_bar[t * cs + lane] * pb[t] + in.b_bar[t * cs + lane] * in.x[t * in.channels + c];
    }
  }
}

std::vector<double> states_parallel(const ScanInputs& in, unsigned threads) {
  const std::size_t lanes = in.channels * in.state;
  std::vector<double> h(in.steps * lanes, 0.0);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(lanes)));
  if (threads == 1) {
    scan_lanes(in, 0, lanes, h);
    return h;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (lanes + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t b = w * per, e = std::min(lanes, b + per);
    if (b >= e) break;
    // Lanes are disjoint, so workers write disjoint entries of h.
    pool.emplace_back([&in, &h, b, e] { scan_lanes(in, b, e, h); });
  }
  for (auto& th : pool) th.join();
  return h;
}

Tensor readout(const ScanInputs& in, const std::vector<double>& h) {
  Tensor y = Tensor::matrix(in.steps, in.channels);
  const std::size_t cs = in.channels * in.state;
  for (std::size_t t = 0; t < in.steps; ++t) {
    for (std::size_t c = 0; c < in.channels; ++c) {
      double acc = in.d[c] * in.x[t * in.channels + c];
      for (std::size_t s = 0; s < in.state; ++s) acc += in.c[t * in.state + s] * h[t * cs + c * in.state + s];
      y[t * in.channels + c] = acc;
    }
  }
  return y;
}

}  // namespace

Discretized discretize(std::span<const double> delta, const Tensor& a, std::span<const double> b_t) {
  const std::size_t channels = a.rows(), state = a.cols();
  if (delta.size() != channels || b_t.size() != state) {
    throw DimensionError(fmt::format("discretize: delta {} / B {} for A {}", delta.size(), b_t.size(),
                                     diff::shape_str(a.shape())));
  }
  Discretized out{Tensor::matrix(channels, state), Tensor::matrix(channels, state)};
  for (std::size_t c = 0; c < channels; ++c) {
    if (!(delta[c] > 0.0)) throw ContractError(fmt::format("discretize: delta[{}] = {} is not positive", c, delta[c]));
    for (std::size_t s = 0; s < state; ++s) {
      out.a_bar(c, s) = std::exp(delta[c] * a(c, s));
      out.b_bar(c, s) = delta[c] * b_t[s];
    }
  }
  return out;
}

void ScanInputs::validate() const {
  const std::size_t cs = channels * state;
  require(steps >= 1 && channels >= 1 && state >= 1, "empty dimensions");
  require(a_bar.size() == steps * cs, fmt::format("a_bar has {} values, expected {}", a_bar.size(), steps * cs));
  require(b_bar.size() == steps * cs, fmt::format("b_bar has {} values, expected {}", b_bar.size(), steps * cs));
  require(c.rows() == steps && c.cols() == state, fmt::format("C stream shape {}", diff::shape_str(c.shape())));
  require(x.rows() == steps && x.cols() == channels, fmt::format("x shape {}", diff::shape_str(x.shape())));
  require(d.size() == channels, fmt::format("D has {} values, expected {}", d.size(), channels));
}

ScanInputs make_scan_inputs(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b, const Tensor& c,
                            std::span<const double> d) {
  ScanInputs in;
  in.steps = x.rows();
  in.channels = x.cols();
  in.state = a.cols();
  require(delta.rows() == in.steps && delta.cols() == in.channels, "delta stream length differs from x");
  require(a.rows() == in.channels, "A rows differ from channel count");
  require(b.rows() == in.steps && b.cols() == in.state, "B stream length differs from x");
  const std::size_t cs = in.channels * in.state;
  in.a_bar.resize(in.steps * cs);
  in.b_bar.resize(in.steps * cs);
  for (std::size_t t = 0; t < in.steps; ++t) {
    auto step = discretize(delta.row(t), a, b.row(t));
    std::copy(step.a_bar.vec().begin(), step.a_bar.vec().end(), in.a_bar.begin() + static_cast<std::ptrdiff_t>(t * cs));
    std::copy(step.b_bar.vec().begin(), step.b_bar.vec().end(), in.b_bar.begin() + static_cast<std::ptrdiff_t>(t * cs));
  }
  in.c = c;
  in.d.assign(d.begin(), d.end());
  in.x = x;
  in.validate();
  return in;
}

Tensor selective_scan_sequential(const ScanInputs& in) {
  in.validate();
  return readout(in, states_sequential(in));
}

Tensor selective_scan_parallel(const ScanInputs& in, unsigned threads) {
  in.validate();
  return readout(in, states_parallel(in, threads));
}

Var selective_scan(Var x, Var delta, Var a, Var b, Var c, Var d, ScanMode mode) {
  ScanInputs in = make_scan_inputs(x.value(), delta.value(), a.value(), b.value(), c.value(), d.value().data());
  std::vector<double> h = mode == ScanMode::parallel ? states_parallel(in, 1) : states_sequential(in);
  Tensor y = readout(in, h);
  const std::size_t steps = in.steps, ch = in.channels, st = in.state;
  return x.tape->record(
      std::move(y), {x, delta, a, b, c, d},
      [x, delta, a, b, c, d, steps, ch, st, h = std::move(h), a_bar = std::move(in.a_bar)](diff::Tape& tp,
                                                                                         const Tensor& gy) {
        const Tensor& xv = tp.value(x);
        const Tensor& dv = tp.value(delta);
        const Tensor& av = tp.value(a);
        const Tensor& bv = tp.value(b);
        const Tensor& cv = tp.value(c);
        const Tensor& skip = tp.value(d);
        Tensor gx = Tensor::matrix(steps, ch), gdelta = Tensor::matrix(steps, ch);
        Tensor ga = Tensor::matrix(ch, st), gb = Tensor::matrix(steps, st), gc = Tensor::matrix(steps, st);
        Tensor gd({ch}, 0.0);
        const std::size_t cs = ch * st;
        // Carries dL/dh_{t+1} · a_bar_{t+1} back to step t.
        std::vector<double> carry(cs, 0.0);
        for (std::size_t t = steps; t-- > 0;) {
          for (std::size_t ci = 0; ci < ch; ++ci) {
            const double g = gy[t * ch + ci];
            const double xt = xv[t * ch + ci];
            const double dt = dv[t * ch + ci];
            gd[ci] += g * xt;
            double gxt = g * skip[ci];
            double gdt = 0.0;
            for (std::size_t s = 0; s < st; ++s) {
              const std::size_t k = ci * st + s;
              const double ht = h[t * cs + k];
              gc[t * st + s] += g * ht;
              const double gh = g * cv[t * st + s] + carry[k];
              const double abar = a_bar[t * cs + k];
              const double hprev = t > 0 ? h[(t - 1) * cs + k] : 0.0;
              const double gabar = gh * hprev * abar;
              gdt += gabar * av[k] + gh * bv[t * st + s] * xt;
              ga[k] += gabar * dt;
              gb[t * st + s] += gh * dt * xt;
              gxt += gh * dt * bv[t * st + s];
              carry[k] = gh * abar;
            }
            gx[t * ch + ci] += gxt;
            gdelta[t * ch + ci] += gdt;
          }
        }
        tp.accumulate(x, gx);
        tp.accumulate(delta, gdelta);
        tp.accumulate(a, ga);
        tp.accumulate(b, gb);
        tp.accumulate(c, gc);
        tp.accumulate(d, gd);
      });
}

}  // namespace jcapt::ssm
