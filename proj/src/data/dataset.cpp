#include "jcapt/data/dataset.hpp"

#include <fstream>
#include <string>
#include <unordered_set>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::data {

const Utterance& Dataset::find(const std::string& id) const {
  for (const auto& u : utterances) {
    if (u.id == id) return u;
  }
  throw IntegrityError(fmt::format("dataset has no utterance '{}'", id));
}

Dataset assemble_dataset(std::vector<UtteranceRecord> records, const FeatureFile* features) {
  Dataset d;
  std::unordered_set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw IntegrityError(fmt::format("duplicate utterance id '{}'", r.id));
    Tensor f;
    if (r.inline_features) {
      f = *r.inline_features;
    } else {
      if (!features) throw FormatError(fmt::format("record '{}' references features but no container was given", r.id));
      f = features->at(r.feature_key);
    }
    d.utterances.push_back(to_utterance(r, std::move(f)));
  }
  d.records = std::move(records);
  return d;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto path = dir / kRecordsFile;
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("{}: cannot open", path.string()));
  std::vector<UtteranceRecord> records;
  std::string line;
  bool keyed = false;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_record(line, fmt::format("{}:{}", path.string(), no)));
    keyed = keyed || !records.back().inline_features;
  }
  if (records.empty()) throw EmptyDatasetError(fmt::format("{}: no records", path.string()));
  std::optional<FeatureFile> features;
  if (keyed) features = read_feature_file(dir / kFeaturesFile);
  return assemble_dataset(std::move(records), features ? &*features : nullptr);
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kRecordsFile, std::ios::trunc);
  if (!out) throw FormatError(fmt::format("{}: cannot open for writing", (dir / kRecordsFile).string()));
  FeatureFile features;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    out << serialize_record(d.records[i]) << '\n';
    if (!d.records[i].inline_features) features.add(d.records[i].feature_key, d.utterances[i].features);
  }
  if (!features.ids.empty()) write_feature_file(dir / kFeaturesFile, features);
}

std::filesystem::path resolve_split(const std::filesystem::path& dir, const char* split) {
  if (std::filesystem::exists(dir / kRecordsFile)) return dir;
  if (std::filesystem::exists(dir / split / kRecordsFile)) return dir / split;
  throw FormatError(fmt::format("{}: no {} here or in {}/", dir.string(), kRecordsFile, split));
}

}  // namespace jcapt::data
