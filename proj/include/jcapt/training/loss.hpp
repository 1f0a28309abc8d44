#pragma once

#include <span>

#include "jcapt/model/model.hpp"
#include "jcapt/scoring/heads.hpp"

namespace jcapt::training {

using diff::Tensor;
using diff::Var;
using model::Utterance;

struct LossBreakdown {
  double l_phn = 0.0;
  double l_word = 0.0;
  double l_utt = 0.0;
  double l_apa = 0.0;
  double l_mdd = 0.0;
  double l_total = 0.0;
};

struct LossTerms {
  Var l_phn, l_word, l_utt, l_apa, l_mdd, l_total;
  LossBreakdown values() const;
};

// Per-level MSE. Arity mismatches throw IntegrityError.
Var phone_loss(Var pred, std::span<const double> target);
Var word_loss(Var pred, const Tensor& target);
Var utterance_loss(Var pred, std::span<const double> target);

// Mean cross-entropy against the realized phones. Ids outside the
// inventory throw ContractError.
Var mdd_loss(Var logits, std::span<const features::PhoneId> realized);

// Throws ConfigError unless alpha is in [0, 1].
void check_alpha(double alpha);
double total_loss(double l_apa, double l_mdd, double alpha);
Var total_loss(Var l_apa, Var l_mdd, double alpha);

// All terms for one utterance.
LossTerms utterance_losses(const scoring::HeadOutputs& out, const Utterance& u, double alpha);

}  // namespace jcapt::training
