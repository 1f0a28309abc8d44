#include "jcapt/ssm/encoder.hpp"

#include <cmath>

#include <fmt/format.h>

#include "jcapt/diff/ops.hpp"
#include "jcapt/errors.hpp"

namespace jcapt::ssm {

using diff::Tensor;

namespace {
// Rows with RMS well below 0.1 (fresh think tokens) are amplified at most ~10x.
constexpr double kNormEps = 1e-2;
}  // namespace

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(fmt::format("encoder config: {} must be >= 1", name));
  };
  positive(d_model, "d_model");
  positive(d_state, "d_state");
  positive(expand, "expand");
  positive(n_layers, "n_layers");
  positive(conv_width, "conv_width");
}

MambaBlock::MambaBlock(const EncoderConfig& cfg, const std::string& prefix, ParamStore& store, Rng& rng)
    : cfg_(cfg) {
  const std::size_t d = cfg.d_model, di = cfg.d_inner(), s = cfg.d_state, r = cfg.dt_rank(), w = cfg.conv_width;
  norm_gain = store.add(prefix + ".norm_gain", Tensor({d}, 1.0));
  in_proj = store.add(prefix + ".in_proj", diff::he_uniform({d, 2 * di}, d, rng));
  conv_kernel = store.add(prefix + ".conv_kernel", diff::he_uniform({w, di}, w, rng));
  conv_bias = store.add(prefix + ".conv_bias", Tensor({di}, 0.0));
  x_proj = store.add(prefix + ".x_proj", diff::he_uniform({di, r + 2 * s}, di, rng));

  Tensor dt_w({r, di});
  std::uniform_real_distribution<double> dt_w_dist(-1.0 / std::sqrt(double(r)), 1.0 / std::sqrt(double(r)));
  for (auto& v : dt_w.vec()) v = dt_w_dist(rng);
  dt_proj = store.add(prefix + ".dt_proj", std::move(dt_w));

  // Δ starts log-uniform in [0.05, 0.5], a memory of a few phones; bias is
  // its inverse softplus.
  Tensor dt_b({di});
  std::uniform_real_distribution<double> log_dt(std::log(0.05), std::log(0.5));
  for (auto& v : dt_b.vec()) {
    const double dt = std::exp(log_dt(rng));
    v = dt + std::log(-std::expm1(-dt));
  }
  dt_bias = store.add(prefix + ".dt_bias", std::move(dt_b));

  // A = −exp(a_log) = −(1..S) per channel.
  Tensor a({di, s});
  for (std::size_t c = 0; c < di; ++c) {
    for (std::size_t k = 0; k < s; ++k) a(c, k) = std::log(static_cast<double>(k + 1));
  }
  a_log = store.add(prefix + ".a_log", std::move(a));
  d_skip = store.add(prefix + ".d_skip", Tensor({di}, 1.0));
  out_proj = store.add(prefix + ".out_proj", diff::fan_in_uniform({di, d}, di, rng));
}

Var MambaBlock::forward(Tape& tape, const ParamStore& store, Var x) const {
  const std::size_t di = cfg_.d_inner(), s = cfg_.d_state, r = cfg_.dt_rank();
  if (x.value().rank() != 2 || x.value().cols() != cfg_.d_model) {
    throw DimensionError(
        fmt::format("mamba_block: input {} does not have d_model={} columns", diff::shape_str(x.shape()), cfg_.d_model));
  }
  auto p = [&](ParamId id) { return tape.param(store, id); };

  Var xz = diff::matmul(diff::rms_norm(x, p(norm_gain), kNormEps), p(in_proj));
  Var u = diff::slice_cols(xz, 0, di);
  Var gate = diff::slice_cols(xz, di, 2 * di);
  u = diff::silu(diff::causal_depthwise_conv(u, p(conv_kernel), p(conv_bias)));

  Var proj = diff::matmul(u, p(x_proj));
  Var dt_low = diff::slice_cols(proj, 0, r);
  Var b = diff::slice_cols(proj, r, r + s);
  Var c = diff::slice_cols(proj, r + s, r + 2 * s);
  Var delta = diff::softplus(diff::add_bias(diff::matmul(dt_low, p(dt_proj)), p(dt_bias)));
  Var a = diff::scale(diff::exp(p(a_log)), -1.0);

  Var y = selective_scan(u, delta, a, b, c, p(d_skip), cfg_.scan);
  y = diff::mul(y, diff::silu(gate));
  return diff::add(x, diff::matmul(y, p(out_proj)));
}

Var run_reversed(const MambaBlock& block, Tape& tape, const ParamStore& store, Var x) {
  return diff::reverse_rows(block.forward(tape, store, diff::reverse_rows(x)));
}

BiMambaEncoder::BiMambaEncoder(const EncoderConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.think_tokens > 0) {
    think_ = store.add("encoder.think_tokens", diff::normal({cfg_.think_tokens, cfg_.d_model}, 0.02, rng));
  }
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string base = fmt::format("encoder.layer{}", l);
    Layer layer{MambaBlock(cfg_, base + ".fwd", store, rng), MambaBlock(cfg_, base + ".bwd", store, rng), {}, {}};
    if (cfg_.combine == Combine::concat_project) {
      layer.merge_w = store.add(base + ".merge_w", diff::fan_in_uniform({2 * cfg_.d_model, cfg_.d_model}, 2 * cfg_.d_model, rng));
      layer.merge_b = store.add(base + ".merge_b", Tensor({cfg_.d_model}, 0.0));
    }
    layers_.push_back(std::move(layer));
  }
}

Var BiMambaEncoder::append_think_tokens(Tape& tape, const ParamStore& store, Var x_hat) const {
  if (!think_) return x_hat;
  return diff::concat_rows(x_hat, tape.param(store, *think_));
}

Var BiMambaEncoder::encode(Tape& tape, const ParamStore& store, Var x, std::size_t n_phones) const {
  if (n_phones == 0) throw ContractError("bimamba_encode: empty utterance (N = 0)");
  if (x.value().rows() != n_phones + cfg_.think_tokens) {
    throw DimensionError(fmt::format("bimamba_encode: {} rows, expected N + K = {} + {}", x.value().rows(), n_phones,
                                     cfg_.think_tokens));
  }
  Var h = x;
  for (const Layer& layer : layers_) {
    Var f = layer.fwd.forward(tape, store, h);
    Var b = run_reversed(layer.bwd, tape, store, h);
    if (cfg_.combine == Combine::concat_project) {
      h = diff::add_bias(diff::matmul(diff::concat_cols(f, b), tape.param(store, *layer.merge_w)),
                         tape.param(store, *layer.merge_b));
    } else {
      h = diff::add(f, b);
    }
  }
  if (cfg_.think_tokens == 0) return h;
  return diff::slice_rows(h, 0, n_phones);
}

Var BiMambaEncoder::forward(Tape& tape, const ParamStore& store, Var x_hat) const {
  const std::size_t n = x_hat.value().rows();
  return encode(tape, store, append_think_tokens(tape, store, x_hat), n);
}

}  // namespace jcapt::ssm
