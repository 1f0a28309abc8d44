#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "jcapt/data/records.hpp"

namespace jcapt::data {

// Best-effort converter for speechocean762 `scores.json` annotations:
//   { "<utt id>": { "accuracy", "completeness", "fluency", "prosodic", "total",
//                   "words": [ { "accuracy", "stress", "total",
//                                "phones": ["W", "IY0", ...],
//                                "phones-accuracy": [2.0, ...],
//                                "mispronunciations": [ { "index", "canonical-phone",
//                                                         "pronounced-phone" } ] } ] } }
// Stress digits are stripped; <DEL> and <unk> map to the inventory's
// <del>/<unk>. Records carry feature_key = utterance id, and features must
// be supplied in a separate container. Records come out sorted by id.
std::vector<UtteranceRecord> parse_speechocean(std::string_view json_text, std::string_view source = "<scores>");
std::vector<UtteranceRecord> import_speechocean(const std::filesystem::path& scores_json);

}  // namespace jcapt::data
