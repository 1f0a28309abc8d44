#include "jcapt/scoring/heads.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "jcapt/diff/ops.hpp"
#include "jcapt/errors.hpp"
#include "jcapt/features/phones.hpp"

namespace jcapt::scoring {

namespace ops = jcapt::diff;

std::string_view aspect_name(Aspect a) {
  switch (a) {
    case Aspect::accuracy: return "accuracy";
    case Aspect::completeness: return "completeness";
    case Aspect::fluency: return "fluency";
    case Aspect::prosody: return "prosody";
    case Aspect::total: return "total";
  }
  return "?";
}

void validate_word_spans(const WordSpans& spans, std::size_t n) {
  if (spans.empty()) throw AlignmentError("word spans: no words");
  std::size_t expect = 0;
  for (std::size_t w = 0; w < spans.size(); ++w) {
    const auto [b, e] = spans[w];
    if (b != expect) {
      throw AlignmentError(fmt::format("word spans: word {} starts at phone {}, expected {}", w, b, expect));
    }
    if (e <= b) throw AlignmentError(fmt::format("word spans: word {} is empty", w));
    expect = e;
  }
  if (expect != n) throw AlignmentError(fmt::format("word spans cover {} phones, utterance has {}", expect, n));
}

WordSpans word_spans_from_index(std::span<const std::size_t> word_of_phone) {
  WordSpans spans;
  for (std::size_t i = 0; i < word_of_phone.size(); ++i) {
    const std::size_t w = word_of_phone[i];
    if (!spans.empty() && w == spans.size() - 1) {
      spans.back().second = i + 1;
    } else if (w == spans.size()) {
      spans.emplace_back(i, i + 1);
    } else {
      throw AlignmentError(fmt::format("phone {} has word index {} after word {}", i, w, spans.size() - 1));
    }
  }
  validate_word_spans(spans, word_of_phone.size());
  return spans;
}

AspectPooler::AspectPooler(std::size_t d_model, std::size_t d_attn, const std::string& prefix, ParamStore& store,
                           Rng& rng) {
  if (d_attn == 0) throw ConfigError("aspect pooler: d_attn must be >= 1");
  w_proj = store.add(prefix + ".w_proj", diff::he_uniform({d_model, d_attn}, d_model, rng));
  w_score = store.add(prefix + ".w_score", diff::he_uniform({d_attn, 1}, d_attn, rng));
}

Var AspectPooler::scores(Tape& tape, const ParamStore& store, Var h) const {
  Var s = ops::matmul(ops::tanh(ops::matmul(h, tape.param(store, w_proj))), tape.param(store, w_score));
  return ops::reshape(s, {h.value().rows()});
}

Var AspectPooler::weights(Tape& tape, const ParamStore& store, Var h) const {
  const std::size_t n = h.value().rows();
  Var s = ops::reshape(scores(tape, store, h), {1, n});
  return ops::reshape(ops::softmax(s), {n});
}

Var pool(Var h, Var alpha) {
  const Tensor& a = alpha.value();
  const std::size_t n = h.value().rows();
  if (a.rank() != 1 || a.size() != n) {
    throw ContractError(fmt::format("pool: alpha {} does not match {} rows", diff::shape_str(a.shape()), n));
  }
  const double total = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ContractError(fmt::format("pool: alpha sums to {}", total));
  Var out = ops::matmul(ops::reshape(alpha, {1, n}), h);
  return ops::reshape(out, {h.value().cols()});
}

PredictionBundle PredictionBundle::from(const HeadOutputs& out) {
  return {out.phone_scores.value(), out.mdd_logits.value(), out.word_scores.value(), out.utterance_scores.value()};
}

bool PredictionBundle::all_finite() const {
  return phone_scores.all_finite() && mdd_logits.all_finite() && word_scores.all_finite() &&
         utterance_scores.all_finite();
}

ScoringHeads::ScoringHeads(std::size_t d_model, std::size_t d_attn, ParamStore& store, Rng& rng)
    : d_model_(d_model), d_attn_(d_attn == 0 ? std::max<std::size_t>(1, d_model / 2) : d_attn) {
  const std::size_t d = d_model;
  phone_w = store.add("heads.phone_w", diff::he_uniform({d, 1}, d, rng));
  phone_b = store.add("heads.phone_b", Tensor({1}, 0.0));
  mdd_w = store.add("heads.mdd_w", diff::he_uniform({d, features::kPhoneCount}, d, rng));
  mdd_b = store.add("heads.mdd_b", Tensor({features::kPhoneCount}, 0.0));
  word_w = store.add("heads.word_w", diff::he_uniform({d, kWordScoreCount}, d, rng));
  word_b = store.add("heads.word_b", Tensor({kWordScoreCount}, 0.0));
  for (Aspect a : kAspects) {
    const std::string name(aspect_name(a));
    poolers_.emplace_back(d, d_attn_, "heads.pool." + name, store, rng);
  }
  for (Aspect a : kAspects) {
    const auto i = static_cast<std::size_t>(a);
    const std::string name(aspect_name(a));
    utt_w[i] = store.add("heads.utt." + name + ".w", diff::he_uniform({d, 1}, d, rng));
    utt_b[i] = store.add("heads.utt." + name + ".b", Tensor({1}, 0.0));
  }
}

Var ScoringHeads::phone_scores(Tape& tape, const ParamStore& store, Var h) const {
  Var s = ops::add_bias(ops::matmul(h, tape.param(store, phone_w)), tape.param(store, phone_b));
  return ops::reshape(s, {h.value().rows()});
}

Var ScoringHeads::mdd_logits(Tape& tape, const ParamStore& store, Var h) const {
  return ops::add_bias(ops::matmul(h, tape.param(store, mdd_w)), tape.param(store, mdd_b));
}

Var ScoringHeads::word_scores(Tape& tape, const ParamStore& store, Var h, const WordSpans& spans) const {
  validate_word_spans(spans, h.value().rows());
  Var pooled = ops::segment_mean(h, spans);
  return ops::add_bias(ops::matmul(pooled, tape.param(store, word_w)), tape.param(store, word_b));
}

Var ScoringHeads::utterance_scores(Tape& tape, const ParamStore& store, Var h) const {
  std::optional<Var> out;
  for (Aspect a : kAspects) {
    const auto i = static_cast<std::size_t>(a);
    Var hu = ops::reshape(pool(h, poolers_[i].weights(tape, store, h)), {1, d_model_});
    Var s = ops::add_bias(ops::matmul(hu, tape.param(store, utt_w[i])), tape.param(store, utt_b[i]));
    out = out ? ops::concat_cols(*out, s) : s;
  }
  return ops::reshape(*out, {kAspectCount});
}

HeadOutputs ScoringHeads::forward(Tape& tape, const ParamStore& store, Var h, const WordSpans& spans) const {
  if (h.value().rank() != 2 || h.value().cols() != d_model_) {
    throw DimensionError(fmt::format("scoring heads: input {} does not have d_model={} columns",
                                     diff::shape_str(h.shape()), d_model_));
  }
  return {phone_scores(tape, store, h), mdd_logits(tape, store, h), word_scores(tape, store, h, spans),
          utterance_scores(tape, store, h)};
}

}  // namespace jcapt::scoring
