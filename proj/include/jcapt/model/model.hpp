#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jcapt/features/frontend.hpp"
#include "jcapt/features/phones.hpp"
#include "jcapt/scoring/heads.hpp"
#include "jcapt/ssm/encoder.hpp"

namespace jcapt::model {

using diff::ParamStore;
using diff::Tape;
using diff::Tensor;
using diff::Var;
using features::PhoneId;

// One utterance in training form. All scores are normalized to [0, 1].
struct Utterance {
  std::string id;
  std::vector<PhoneId> canonical;
  std::vector<PhoneId> realized;
  std::vector<std::size_t> word_of_phone;
  std::vector<double> phone_scores;                       // N
  Tensor word_scores;                                     // W×3: accuracy, stress, total
  std::array<double, scoring::kAspectCount> utterance_scores{};  // kAspects order
  Tensor features;                                        // N×F

  std::size_t size() const { return canonical.size(); }
  std::size_t word_count() const;
  scoring::WordSpans spans() const;
  // Throws IntegrityError (naming the id) when fields disagree.
  void validate(std::size_t feature_dim) const;
};

struct ModelConfig {
  ssm::EncoderConfig encoder;
  std::size_t feature_dim = 33;
  std::size_t d_attn = 0;  // 0 = d_model / 2
  void validate() const;
};

// Front end → BiMamba encoder → scoring heads.
class JcaptModel {
 public:
  JcaptModel(const ModelConfig& cfg, features::PhonologicalTable table, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const features::PhonologicalTable& table() const { return frontend_.table(); }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  const features::FeatureFrontEnd& frontend() const { return frontend_; }
  const ssm::BiMambaEncoder& encoder() const { return encoder_; }
  const scoring::ScoringHeads& heads() const { return heads_; }

  // Encoded phone states, N×d_model.
  Var encode(Tape& tape, const ParamStore& store, const Utterance& u) const;
  scoring::HeadOutputs forward(Tape& tape, const ParamStore& store, const Utterance& u) const;
  scoring::PredictionBundle predict(const Utterance& u) const;

 private:
  JcaptModel(const ModelConfig& cfg, features::PhonologicalTable table, Rng&& rng);

  ModelConfig cfg_;
  ParamStore store_;
  features::FeatureFrontEnd frontend_;
  ssm::BiMambaEncoder encoder_;
  scoring::ScoringHeads heads_;
};

}  // namespace jcapt::model
