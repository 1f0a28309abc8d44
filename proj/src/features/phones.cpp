#include "jcapt/features/phones.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>
#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::features {
namespace detail {
extern const char* const kBuiltinTable;
}

namespace {

constexpr std::array<std::string_view, kPhoneCount> kSymbols = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",    "F",
    "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY", "P",     "R",
    "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH", "<del>", "<unk>"};

constexpr std::array<std::string_view, kAttributeCount> kAttributes = {
    "voiced",   "stop",        "fricative", "affricate",    "nasal",   "liquid", "glide", "vowel",
    "bilabial", "labiodental", "dental",    "alveolar",     "postalveolar", "palatal", "velar", "glottal",
    "high",     "mid",         "low",       "front",        "central", "back",   "round", "diphthong"};

std::size_t attribute_index(std::string_view name) {
  auto it = std::find(kAttributes.begin(), kAttributes.end(), name);
  if (it == kAttributes.end()) throw ContractError(fmt::format("unknown phonological attribute '{}'", name));
  return static_cast<std::size_t>(it - kAttributes.begin());
}

}  // namespace

const std::array<std::string_view, kPhoneCount>& PhoneInventory::symbols() { return kSymbols; }

std::string_view PhoneInventory::symbol(PhoneId id) {
  if (id >= kPhoneCount) throw InventoryError(fmt::format("phone id {} outside inventory of {}", id, kPhoneCount));
  return kSymbols[id];
}

std::optional<PhoneId> PhoneInventory::find(std::string_view symbol) {
  auto it = std::find(kSymbols.begin(), kSymbols.end(), symbol);
  if (it == kSymbols.end()) return std::nullopt;
  return static_cast<PhoneId>(it - kSymbols.begin());
}

PhoneId PhoneInventory::id(std::string_view symbol) {
  auto id = find(symbol);
  if (!id) throw InventoryError(fmt::format("unknown phone symbol '{}'", symbol));
  return *id;
}

const std::array<std::string_view, kAttributeCount>& attribute_names() { return kAttributes; }

PhonologicalTable PhonologicalTable::parse(std::string_view text, std::string_view source) {
  PhonologicalTable table;
  std::array<bool, kPhoneCount> seen{};
  bool have_header = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    return FormatError(fmt::format("phonological table {}:{}: {}", source, lineno, what));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head.empty()) continue;
    if (head == "version") {
      if (!(fields >> table.version_) || table.version_ != 1) throw fail("unsupported or missing version (expected 1)");
      continue;
    }
    if (head == "attributes") {
      std::string name;
      std::size_t i = 0;
      while (fields >> name) {
        if (i >= kAttributeCount || kAttributes[i] != name) {
          throw fail(fmt::format("attribute column {} is '{}', expected '{}'", i, name,
                                 i < kAttributeCount ? kAttributes[i] : "<none>"));
        }
        ++i;
      }
      if (i != kAttributeCount) throw fail(fmt::format("{} attribute columns, expected {}", i, kAttributeCount));
      have_header = true;
      continue;
    }
    if (!have_header) throw fail("phone row before the attributes header");
    auto id = PhoneInventory::find(head);
    if (!id) throw fail(fmt::format("unknown phone symbol '{}'", head));
    if (seen[*id]) throw fail(fmt::format("duplicate row for '{}'", head));
    seen[*id] = true;
    Row& row = table.rows_[*id];
    for (std::size_t a = 0; a < kAttributeCount; ++a) {
      int bit = -1;
      if (!(fields >> bit) || (bit != 0 && bit != 1)) {
        throw fail(fmt::format("'{}' attribute {} ('{}') is not 0/1", head, a, kAttributes[a]));
      }
      row[a] = static_cast<std::uint8_t>(bit);
    }
    std::string extra;
    if (fields >> extra) throw fail(fmt::format("'{}' has more than {} attributes", head, kAttributeCount));
  }
  if (table.version_ == 0) throw FormatError(fmt::format("phonological table {}: missing version line", source));
  for (PhoneId id = 0; id < kPhoneCount; ++id) {
    if (!seen[id]) {
      throw FormatError(fmt::format("phonological table {}: no row for '{}'", source, kSymbols[id]));
    }
  }
  table.validate();
  return table;
}

PhonologicalTable PhonologicalTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("phonological table {}: cannot open", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const PhonologicalTable& PhonologicalTable::builtin() {
  static const PhonologicalTable table = parse(detail::kBuiltinTable, "<builtin>");
  return table;
}

bool PhonologicalTable::has(PhoneId id, std::string_view attribute) const {
  return row(id)[attribute_index(attribute)] != 0;
}

std::string PhonologicalTable::serialize() const {
  std::string out = fmt::format("version {}\nattributes", version_);
  for (auto a : kAttributes) out += fmt::format(" {}", a);
  out += '\n';
  for (PhoneId id = 0; id < kPhoneCount; ++id) {
    out += kSymbols[id];
    for (auto bit : rows_[id]) out += bit ? " 1" : " 0";
    out += '\n';
  }
  return out;
}

std::uint32_t PhonologicalTable::checksum() const {
  const std::string text = serialize();
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  return crc.checksum();
}

void PhonologicalTable::validate() const {
  const std::size_t vowel = attribute_index("vowel");
  const std::size_t height[] = {attribute_index("high"), attribute_index("mid"), attribute_index("low")};
  const std::size_t backness[] = {attribute_index("front"), attribute_index("central"), attribute_index("back")};
  for (PhoneId id = 0; id < kPhoneCount; ++id) {
    const Row& r = rows_[id];
    const auto bits = std::count(r.begin(), r.end(), std::uint8_t{1});
    if (!PhoneInventory::is_real_phone(id)) {
      if (bits != 0) throw FormatError(fmt::format("phonological table: '{}' row must be all zero", kSymbols[id]));
      continue;
    }
    if (bits < 2) throw FormatError(fmt::format("phonological table: '{}' has fewer than 2 attributes", kSymbols[id]));
    if (r[vowel]) {
      auto count = [&](const std::size_t (&idx)[3]) { return r[idx[0]] + r[idx[1]] + r[idx[2]]; };
      if (count(height) != 1 || count(backness) != 1) {
        throw FormatError(
            fmt::format("phonological table: vowel '{}' needs exactly one height and one backness bit", kSymbols[id]));
      }
    }
  }
}

}  // namespace jcapt::features
