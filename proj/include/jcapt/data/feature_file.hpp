#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jcapt/diff/tensor.hpp"

namespace jcapt::data {

// Binary feature container (little-endian):
//   "JCFEATS\0"  u32 version  u32 record_count
//   per record:  u32 rows  u32 cols  f32[rows*cols]
//   index:       per record  u32 id_len  id bytes  u64 record_offset
//   trailer:     u64 index_offset
inline constexpr std::array<char, 8> kFeatureMagic = {'J', 'C', 'F', 'E', 'A', 'T', 'S', '\0'};
inline constexpr std::uint32_t kFeatureVersion = 1;

struct FeatureFile {
  std::vector<std::string> ids;
  std::vector<diff::Tensor> matrices;

  // Throws FormatError when the id is absent.
  const diff::Tensor& at(const std::string& id) const;
  void add(std::string id, diff::Tensor m);
};

// Values are stored as float32; callers wanting exact round trips should
// pre-round with round_to_float.
void write_feature_file(const std::filesystem::path& path, const FeatureFile& f);
FeatureFile read_feature_file(const std::filesystem::path& path);

void round_to_float(diff::Tensor& t);

}  // namespace jcapt::data
