#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jcapt/features/phones.hpp"
#include "jcapt/model/model.hpp"

namespace jcapt::metrics {

using features::PhoneId;

// Pearson correlation. Empty result when undefined (fewer than two points
// or a constant argument). Length mismatch throws ContractError.
std::optional<double> pcc(std::span<const double> x, std::span<const double> y);
double mse(std::span<const double> x, std::span<const double> y);

// Hierarchical MDD counts: TA/FR over correctly pronounced phones, FA/TR
// over mispronounced ones, CD ⊆ TR where the diagnosis is also right.
struct MddConfusion {
  std::size_t ta = 0, fr = 0, fa = 0, tr = 0, cd = 0;

  std::size_t total() const { return ta + fr + fa + tr; }
  MddConfusion& operator+=(const MddConfusion& o);
  friend bool operator==(const MddConfusion&, const MddConfusion&) = default;
};

// Positionwise; throws AlignmentError on a length mismatch.
MddConfusion mdd_confusion(std::span<const PhoneId> canonical, std::span<const PhoneId> annotated,
                           std::span<const PhoneId> predicted);

// A zero denominator gives value 0 with `undefined` set.
struct Rate {
  double value = 0.0;
  bool undefined = false;
};

struct MddRates {
  Rate recall, precision, f1, correct_diag;
};

MddRates mdd_rates(const MddConfusion& c);

struct PerCounts {
  std::size_t errors = 0;
  std::size_t reference = 0;  // annotated phones other than <del>
};
PerCounts per_counts(std::span<const PhoneId> annotated, std::span<const PhoneId> predicted);
// errors / reference; throws ContractError when reference is 0.
double per(std::span<const PhoneId> annotated, std::span<const PhoneId> predicted);
double per(const PerCounts& c);

struct EvalReport {
  std::size_t utterances = 0, phones = 0, words = 0;
  double phone_mse = 0.0;
  std::optional<double> phone_pcc;
  std::array<double, 3> word_mse{};
  std::array<std::optional<double>, 3> word_pcc;  // accuracy, stress, total
  std::array<double, 5> utterance_mse{};
  std::array<std::optional<double>, 5> utterance_pcc;  // accuracy, completeness, fluency, prosody, total
  MddConfusion confusion;
  MddRates mdd;
  double per = 0.0;

  // Structured text with a fixed key order; undefined values are null.
  std::string to_json() const;
};

// Predicted phone = argmax of the MDD logits. PCC pools all items of a
// level across the dataset. Scores are compared in normalized units.
// Throws EmptyDatasetError on an empty set; metric errors name the utterance.
EvalReport evaluate(const model::JcaptModel& m, const std::vector<model::Utterance>& data);

std::vector<PhoneId> predicted_phones(const diff::Tensor& mdd_logits);

}  // namespace jcapt::metrics
