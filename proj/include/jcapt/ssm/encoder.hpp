#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "jcapt/diff/init.hpp"
#include "jcapt/diff/params.hpp"
#include "jcapt/diff/tape.hpp"
#include "jcapt/ssm/scan.hpp"

namespace jcapt::ssm {

using diff::ParamId;
using diff::ParamStore;
using diff::Tape;

enum class Combine { concat_project, sum };

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t d_state = 16;
  std::size_t expand = 2;
  std::size_t n_layers = 2;
  std::size_t conv_width = 4;
  std::size_t think_tokens = 4;
  Combine combine = Combine::concat_project;
  ScanMode scan = ScanMode::sequential;

  std::size_t d_inner() const { return expand * d_model; }
  // Low-rank Δ projection width, ceil(d_model / 16).
  std::size_t dt_rank() const { return (d_model + 15) / 16; }
  void validate() const;
};

// Gated selective-SSM block with a pre-norm residual connection:
//   [u | z] = rms_norm(x)·W_in
//   u' = SiLU(causal_conv(u))
//   Δ = softplus(u'·W_x[:, :r]·W_dt + b_dt),  B = u'·W_x[:, r:r+S],  C = u'·W_x[:, r+S:]
//   y = scan(u', Δ, −exp(A_log), B, C, D) ⊙ SiLU(z)
//   out = x + y·W_out
class MambaBlock {
 public:
  MambaBlock(const EncoderConfig& cfg, const std::string& prefix, ParamStore& store, Rng& rng);

  Var forward(Tape& tape, const ParamStore& store, Var x) const;

  ParamId norm_gain, in_proj, conv_kernel, conv_bias, x_proj, dt_proj, dt_bias, a_log, d_skip, out_proj;

 private:
  EncoderConfig cfg_;
};

// Backward-direction pass: reverse time, run the block, restore order.
Var run_reversed(const MambaBlock& block, Tape& tape, const ParamStore& store, Var x);

// Stack of bidirectional layers. Each layer runs a forward-direction block
// on the sequence and a backward-direction block on the reversed sequence
// (un-reversed afterwards) and merges them per Combine.
class BiMambaEncoder {
 public:
  BiMambaEncoder(const EncoderConfig& cfg, ParamStore& store, Rng& rng);

  const EncoderConfig& config() const { return cfg_; }

  // Rows 0..N-1 are the input, rows N..N+K-1 the think embeddings in order.
  Var append_think_tokens(Tape& tape, const ParamStore& store, Var x_hat) const;
  // Runs the stack over N+K rows and returns the first n_phones rows.
  Var encode(Tape& tape, const ParamStore& store, Var x_with_think, std::size_t n_phones) const;
  // append_think_tokens followed by encode.
  Var forward(Tape& tape, const ParamStore& store, Var x_hat) const;

  std::optional<ParamId> think_tokens() const { return think_; }

 private:
  struct Layer {
    MambaBlock fwd;
    MambaBlock bwd;
    std::optional<ParamId> merge_w;
    std::optional<ParamId> merge_b;
  };

  EncoderConfig cfg_;
  std::vector<Layer> layers_;
  std::optional<ParamId> think_;
};

}  // namespace jcapt::ssm
