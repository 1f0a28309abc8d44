#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "jcapt/diff/init.hpp"
#include "jcapt/diff/params.hpp"
#include "jcapt/diff/tape.hpp"

namespace jcapt::scoring {

using diff::ParamId;
using diff::ParamStore;
using diff::Tape;
using diff::Tensor;
using diff::Var;

enum class Aspect { accuracy, completeness, fluency, prosody, total };
inline constexpr std::size_t kAspectCount = 5;
inline constexpr std::array<Aspect, kAspectCount> kAspects = {Aspect::accuracy, Aspect::completeness, Aspect::fluency,
                                                              Aspect::prosody, Aspect::total};
std::string_view aspect_name(Aspect a);

// Word-level outputs, in column order.
inline constexpr std::size_t kWordScoreCount = 3;  // accuracy, stress, total

// Half-open phone ranges, one per word.
using WordSpans = std::vector<std::pair<std::size_t, std::size_t>>;

// Throws AlignmentError unless spans partition [0, n) into contiguous,
// nonempty, ordered ranges.
void validate_word_spans(const WordSpans& spans, std::size_t n);
// Builds spans from a per-phone word index (0, 0, 1, 2, 2, ...). Indices must
// start at 0 and step by at most 1; a word that reappears later is an error.
WordSpans word_spans_from_index(std::span<const std::size_t> word_of_phone);

// score_i = w_aᵀ tanh(W_a h_i), α = softmax(score). W_a is stored d×d_a
// (the transpose) so a whole N×d block goes through one matmul.
class AspectPooler {
 public:
  AspectPooler(std::size_t d_model, std::size_t d_attn, const std::string& prefix, ParamStore& store, Rng& rng);

  // Pre-softmax scores, length N.
  Var scores(Tape& tape, const ParamStore& store, Var h) const;
  // α, length N.
  Var weights(Tape& tape, const ParamStore& store, Var h) const;

  ParamId w_proj, w_score;
};

// Σ_i α_i h_i. Throws ContractError if α has the wrong length or does not
// sum to 1 within 1e-9.
Var pool(Var h, Var alpha);

// Differentiable head outputs for one utterance.
struct HeadOutputs {
  Var phone_scores;      // N
  Var mdd_logits;        // N×41
  Var word_scores;       // W×3
  Var utterance_scores;  // 5, in kAspects order
};

// Plain values, detached from the tape.
struct PredictionBundle {
  Tensor phone_scores;
  Tensor mdd_logits;
  Tensor word_scores;
  Tensor utterance_scores;

  static PredictionBundle from(const HeadOutputs& out);
  bool all_finite() const;
};

class ScoringHeads {
 public:
  // d_attn = 0 selects d_model / 2 (at least 1).
  ScoringHeads(std::size_t d_model, std::size_t d_attn, ParamStore& store, Rng& rng);

  std::size_t d_model() const { return d_model_; }
  std::size_t d_attn() const { return d_attn_; }
  const AspectPooler& pooler(Aspect a) const { return poolers_[static_cast<std::size_t>(a)]; }

  Var phone_scores(Tape& tape, const ParamStore& store, Var h) const;
  Var mdd_logits(Tape& tape, const ParamStore& store, Var h) const;
  Var word_scores(Tape& tape, const ParamStore& store, Var h, const WordSpans& spans) const;
  Var utterance_scores(Tape& tape, const ParamStore& store, Var h) const;
  HeadOutputs forward(Tape& tape, const ParamStore& store, Var h, const WordSpans& spans) const;

  ParamId phone_w, phone_b, mdd_w, mdd_b, word_w, word_b;
  std::array<ParamId, kAspectCount> utt_w{}, utt_b{};

 private:
  std::size_t d_model_;
  std::size_t d_attn_;
  std::vector<AspectPooler> poolers_;
};

}  // namespace jcapt::scoring
