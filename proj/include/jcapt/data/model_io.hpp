#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "jcapt/model/model.hpp"

namespace jcapt::data {

inline constexpr std::array<char, 8> kModelMagic = {'J', 'C', 'M', 'O', 'D', 'E', 'L', '\0'};
inline constexpr std::uint32_t kModelVersion = 1;

// Config, table checksum, score ranges and every parameter at full
// precision, followed by a CRC-32 of the preceding bytes.
void save_model(const model::JcaptModel& m, const std::filesystem::path& path);

// Refuses (FormatError) on bad magic, version, CRC, truncation, a table
// checksum other than `table`'s, different score ranges, or a parameter
// layout that does not match the stored config.
model::JcaptModel load_model(const std::filesystem::path& path,
                             const features::PhonologicalTable& table = features::PhonologicalTable::builtin());

}  // namespace jcapt::data
