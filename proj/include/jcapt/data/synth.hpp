#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "jcapt/data/dataset.hpp"

namespace jcapt::data {

// Planted rule, per phone:
//   u ~ U[0.55, 0.90] if pronounced correctly, U[0.10, 0.45] otherwise
//   ssl = Q · [code(realized) ; u ; nuisance]    Q random orthogonal
//   features = [GOP ; ssl],  GOP from synthetic posteriors around u
//   phone score (normalized) = u + U(±phone_noise)
// u is a linear function of the features, so the best achievable phone MSE
// is phone_noise² / 3.
struct SynthOptions {
  std::size_t min_phones = 3;
  std::size_t max_phones = 20;
  std::size_t max_words = 5;
  double mispronounce_rate = 0.2;
  double deletion_share = 0.15;
  double phone_noise = 0.05;
  double word_noise = 0.05;
  double utterance_noise = 0.03;
  std::size_t code_dims = 24;
  std::size_t nuisance_dims = 7;

  std::size_t feature_dim() const { return 1 + code_dims + 1 + nuisance_dims; }
  double bayes_phone_mse() const { return phone_noise * phone_noise / 3.0; }
};

struct SynthCorpus {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  SynthOptions options;
  Dataset train;  // first n - n/2 utterances
  Dataset test;   // last n/2
  // Mean (score - u)² over the test split: the noise actually drawn.
  double oracle_test_phone_mse = 0.0;
  double mispronounced_fraction = 0.0;

  std::string report_json() const;
};

// Deterministic in (n, seed, options). Throws ContractError for n = 0.
SynthCorpus synth_corpus(std::size_t n, std::uint64_t seed, const SynthOptions& options = {});

// Writes dir/train/, dir/test/ (when nonempty) and dir/synth_report.json.
void write_synth_corpus(const SynthCorpus& c, const std::filesystem::path& dir);

}  // namespace jcapt::data
