#include "jcapt/training/loss.hpp"

#include <fmt/format.h>

#include "jcapt/diff/ops.hpp"
#include "jcapt/errors.hpp"

namespace jcapt::training {

namespace ops = jcapt::diff;

LossBreakdown LossTerms::values() const {
  return {l_phn.value().item(), l_word.value().item(), l_utt.value().item(),
          l_apa.value().item(), l_mdd.value().item(), l_total.value().item()};
}

namespace {

Tensor vector_target(std::span<const double> target) {
  Tensor t({target.size()});
  std::copy(target.begin(), target.end(), t.data().begin());
  return t;
}

}  // namespace

Var phone_loss(Var pred, std::span<const double> target) {
  if (pred.value().rank() != 1 || pred.value().size() != target.size()) {
    throw IntegrityError(fmt::format("phone loss: {} predictions for {} targets", pred.value().size(), target.size()));
  }
  return ops::mse(pred, vector_target(target));
}

Var word_loss(Var pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw IntegrityError(fmt::format("word loss: predictions {} vs targets {}", diff::shape_str(pred.shape()),
                                     diff::shape_str(target.shape())));
  }
  return ops::mse(pred, target);
}

Var utterance_loss(Var pred, std::span<const double> target) {
  if (pred.value().size() != scoring::kAspectCount || target.size() != scoring::kAspectCount) {
    throw IntegrityError(fmt::format("utterance loss: {} predictions for {} targets", pred.value().size(),
                                     target.size()));
  }
  return ops::mse(pred, vector_target(target));
}

Var mdd_loss(Var logits, std::span<const features::PhoneId> realized) {
  for (std::size_t i = 0; i < realized.size(); ++i) {
    if (realized[i] >= features::kPhoneCount) {
      throw ContractError(fmt::format("mdd loss: realized id {} at position {} outside the inventory", realized[i], i));
    }
  }
  if (logits.value().rows() != realized.size() || logits.value().cols() != features::kPhoneCount) {
    throw IntegrityError(fmt::format("mdd loss: logits {} for {} labels", diff::shape_str(logits.shape()),
                                     realized.size()));
  }
  return ops::cross_entropy(logits, realized);
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError(fmt::format("alpha must be in [0, 1], got {}", alpha));
}

double total_loss(double l_apa, double l_mdd, double alpha) {
  check_alpha(alpha);
  return (1.0 - alpha) * l_apa + alpha * l_mdd;
}

Var total_loss(Var l_apa, Var l_mdd, double alpha) {
  check_alpha(alpha);
  return ops::add(ops::scale(l_apa, 1.0 - alpha), ops::scale(l_mdd, alpha));
}

LossTerms utterance_losses(const scoring::HeadOutputs& out, const Utterance& u, double alpha) {
  LossTerms t;
  t.l_phn = phone_loss(out.phone_scores, u.phone_scores);
  t.l_word = word_loss(out.word_scores, u.word_scores);
  t.l_utt = utterance_loss(out.utterance_scores, u.utterance_scores);
  t.l_apa = ops::add(ops::add(t.l_phn, t.l_word), t.l_utt);
  t.l_mdd = mdd_loss(out.mdd_logits, u.realized);
  t.l_total = total_loss(t.l_apa, t.l_mdd, alpha);
  return t;
}

}  // namespace jcapt::training
