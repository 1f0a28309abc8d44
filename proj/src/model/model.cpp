#include "jcapt/model/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::model {

std::size_t Utterance::word_count() const { return word_of_phone.empty() ? 0 : word_of_phone.back() + 1; }

scoring::WordSpans Utterance::spans() const { return scoring::word_spans_from_index(word_of_phone); }

void Utterance::validate(std::size_t feature_dim) const {
  auto fail = [&](const std::string& what) { throw IntegrityError(fmt::format("utterance '{}': {}", id, what)); };
  const std::size_t n = canonical.size();
  if (n == 0) fail("no phones");
  if (realized.size() != n) fail(fmt::format("{} realized phones for {} canonical", realized.size(), n));
  if (word_of_phone.size() != n) fail(fmt::format("{} word indices for {} phones", word_of_phone.size(), n));
  if (phone_scores.size() != n) fail(fmt::format("{} phone scores for {} phones", phone_scores.size(), n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!features::PhoneInventory::is_real_phone(canonical[i])) {
      fail(fmt::format("canonical phone {} is not a real phone (id {})", i, canonical[i]));
    }
    if (realized[i] >= features::kPhoneCount) fail(fmt::format("realized phone {} out of range (id {})", i, realized[i]));
  }
  try {
    (void)spans();
  } catch (const AlignmentError& e) {
    fail(e.what());
  }
  if (word_scores.rank() != 2 || word_scores.rows() != word_count() || word_scores.cols() != scoring::kWordScoreCount) {
    fail(fmt::format("word scores {} for {} words", diff::shape_str(word_scores.shape()), word_count()));
  }
  if (features.rank() != 2 || features.rows() != n || features.cols() != feature_dim) {
    fail(fmt::format("features {} for {} phones of dimension {}", diff::shape_str(features.shape()), n, feature_dim));
  }
  if (!features.all_finite()) fail("non-finite feature value");
}

void ModelConfig::validate() const {
  encoder.validate();
  if (feature_dim == 0) throw ConfigError("model config: feature_dim must be >= 1");
}

namespace {

const ModelConfig& checked(const ModelConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

// Member construction order fixes the parameter order in the store and the
// draw order from the generator.
JcaptModel::JcaptModel(const ModelConfig& cfg, features::PhonologicalTable table, std::uint64_t seed)
    : JcaptModel(checked(cfg), std::move(table), Rng(seed)) {}

JcaptModel::JcaptModel(const ModelConfig& cfg, features::PhonologicalTable table, Rng&& rng)
    : cfg_(cfg),
      frontend_(cfg.feature_dim, cfg.encoder.d_model, std::move(table), store_, rng),
      encoder_(cfg.encoder, store_, rng),
      heads_(cfg.encoder.d_model, cfg.d_attn, store_, rng) {}

Var JcaptModel::encode(Tape& tape, const ParamStore& store, const Utterance& u) const {
  Var x = frontend_.assemble(tape, store, u.features, u.canonical);
  return encoder_.forward(tape, store, x);
}

scoring::HeadOutputs JcaptModel::forward(Tape& tape, const ParamStore& store, const Utterance& u) const {
  return heads_.forward(tape, store, encode(tape, store, u), u.spans());
}

scoring::PredictionBundle JcaptModel::predict(const Utterance& u) const {
  Tape tape;
  return scoring::PredictionBundle::from(forward(tape, store_, u));
}

}  // namespace jcapt::model
