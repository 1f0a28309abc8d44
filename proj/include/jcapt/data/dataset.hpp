#pragma once

#include <filesystem>
#include <vector>

#include "jcapt/data/feature_file.hpp"
#include "jcapt/data/records.hpp"

namespace jcapt::data {

// A directory holding records.jsonl and (when any record references one)
// features.bin.
struct Dataset {
  std::vector<UtteranceRecord> records;
  std::vector<Utterance> utterances;  // normalized, parallel to records

  std::size_t size() const { return records.size(); }
  const Utterance& find(const std::string& id) const;
};

inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kFeaturesFile = "features.bin";

// Throws EmptyDatasetError for a file with no records, FormatError for
// schema violations and IntegrityError for feature/phone count mismatches,
// each naming the record.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& d, const std::filesystem::path& dir);

// Builds the normalized view from records plus keyed feature matrices.
Dataset assemble_dataset(std::vector<UtteranceRecord> records, const FeatureFile* features);

// A dataset directory, or a corpus root whose `split` subdirectory holds one.
std::filesystem::path resolve_split(const std::filesystem::path& dir, const char* split);

}  // namespace jcapt::data
