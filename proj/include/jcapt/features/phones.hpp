#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace jcapt::features {

using PhoneId = std::size_t;

inline constexpr std::size_t kPhoneCount = 41;
inline constexpr std::size_t kAttributeCount = 24;
inline constexpr PhoneId kDeleted = 39;
inline constexpr PhoneId kUnknown = 40;
// One-hot plus attribute bits: the canonical projection's input width.
inline constexpr std::size_t kCanonicalInputDim = kPhoneCount + kAttributeCount;

// The 39 ARPAbet phones in alphabetical order, then <del> and <unk>.
// Ids are dense 0..40 and never change between versions.
class PhoneInventory {
 public:
  static const std::array<std::string_view, kPhoneCount>& symbols();
  static std::string_view symbol(PhoneId id);
  static std::optional<PhoneId> find(std::string_view symbol);
  // Throws InventoryError naming the symbol.
  static PhoneId id(std::string_view symbol);
  static bool is_real_phone(PhoneId id) { return id < kDeleted; }
};

const std::array<std::string_view, kAttributeCount>& attribute_names();

// Binary articulatory attributes per phone, loaded from a versioned text
// table and validated on load.
class PhonologicalTable {
 public:
  using Row = std::array<std::uint8_t, kAttributeCount>;

  static PhonologicalTable parse(std::string_view text, std::string_view source = "<memory>");
  static PhonologicalTable load(const std::filesystem::path& path);
  // The fixture compiled into the library.
  static const PhonologicalTable& builtin();

  const Row& row(PhoneId id) const { return rows_.at(id); }
  bool has(PhoneId id, std::string_view attribute) const;
  int version() const { return version_; }
  // CRC-32 over the canonical serialization; recorded in model files.
  std::uint32_t checksum() const;
  std::string serialize() const;

  // Real phones have >= 2 bits; vowels one height and one backness bit;
  // <del>/<unk> rows are zero. Throws FormatError.
  void validate() const;

 private:
  int version_ = 0;
  std::array<Row, kPhoneCount> rows_{};
};

}  // namespace jcapt::features
