#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jcapt/model/model.hpp"

namespace jcapt::data {

using diff::Tensor;
using model::Utterance;

struct PhoneEntry {
  std::string canonical;
  std::string realized;
  double score = 0.0;  // 0–2
  std::size_t word = 0;
};

struct WordEntry {
  double accuracy = 0.0;  // 0–10
  double stress = 0.0;
  double total = 0.0;
};

// One line of records.jsonl, scores in their published ranges.
struct UtteranceRecord {
  std::string id;
  std::vector<PhoneEntry> phones;
  std::vector<WordEntry> words;
  std::array<double, 5> utterance{};  // accuracy, completeness, fluency, prosody, total; 0–10
  // Either inline rows or a key into the feature container.
  std::optional<Tensor> inline_features;
  std::string feature_key;
};

// `where` prefixes error messages (e.g. "records.jsonl:12").
UtteranceRecord parse_record(std::string_view line, std::string_view where);
std::string serialize_record(const UtteranceRecord& r);

// Throws FormatError naming the record id and field.
void validate_record(const UtteranceRecord& r);

// Normalizes scores and resolves symbols; `features` must have one row per
// phone (IntegrityError otherwise).
Utterance to_utterance(const UtteranceRecord& r, Tensor features);
// Inverse of to_utterance. Features are referenced by id unless inlined.
UtteranceRecord to_record(const Utterance& u, bool inline_features = false);

}  // namespace jcapt::data
