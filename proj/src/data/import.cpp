#include "jcapt/data/import.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include <json.hpp>

#include "jcapt/errors.hpp"
#include "jcapt/features/phones.hpp"

namespace jcapt::data {

namespace {

using json = nlohmann::json;
using features::PhoneInventory;

struct Ctx {
  std::string_view source;
  std::string id;

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw FormatError(fmt::format("{}: record '{}' field '{}': {}", source, id, field, what));
  }
  const json& member(const json& obj, const char* key, const std::string& path) const {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) fail(field, "missing");
    return obj.at(key);
  }
  double number(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_number()) fail(path.empty() ? key : path + "." + key, "expected a number");
    return v.get<double>();
  }
  std::string symbol(const json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a phone symbol");
    std::string s = v.get<std::string>();
    if (!s.empty() && s.front() == '<') {
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    } else {
      while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.back()))) s.pop_back();
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    }
    if (!PhoneInventory::find(s)) fail(field, fmt::format("'{}' is not in the phone inventory", v.get<std::string>()));
    return s;
  }
};

}  // namespace

std::vector<UtteranceRecord> parse_speechocean(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", source, e.what()));
  }
  if (!root.is_object()) throw FormatError(fmt::format("{}: top level must be an object keyed by utterance id", source));

  std::vector<UtteranceRecord> out;
  for (const auto& [id, utt] : root.items()) {
    Ctx ctx{source, id};
    UtteranceRecord r;
    r.id = id;
    r.feature_key = id;
    const json& words = ctx.member(utt, "words", "");
    if (!words.is_array() || words.empty()) ctx.fail("words", "expected a nonempty array");
    for (std::size_t w = 0; w < words.size(); ++w) {
      const std::string wp = fmt::format("words[{}]", w);
      const json& word = words[w];
      r.words.push_back({ctx.number(word, "accuracy", wp), ctx.number(word, "stress", wp), ctx.number(word, "total", wp)});
      const json& phones = ctx.member(word, "phones", wp);
      const json& acc = ctx.member(word, "phones-accuracy", wp);
      if (!phones.is_array() || phones.empty()) ctx.fail(wp + ".phones", "expected a nonempty array");
      if (!acc.is_array() || acc.size() != phones.size()) {
        ctx.fail(wp + ".phones-accuracy", fmt::format("expected {} numbers", phones.size()));
      }
      const std::size_t first = r.phones.size();
      for (std::size_t i = 0; i < phones.size(); ++i) {
        const std::string c = ctx.symbol(phones[i], fmt::format("{}.phones[{}]", wp, i));
        if (!acc[i].is_number()) ctx.fail(fmt::format("{}.phones-accuracy[{}]", wp, i), "expected a number");
        r.phones.push_back({c, c, acc[i].get<double>(), w});
      }
      if (word.contains("mispronunciations")) {
        const json& mis = word.at("mispronunciations");
        if (!mis.is_array()) ctx.fail(wp + ".mispronunciations", "expected an array");
        for (std::size_t k = 0; k < mis.size(); ++k) {
          const std::string mp = fmt::format("{}.mispronunciations[{}]", wp, k);
          const json& idx = ctx.member(mis[k], "index", mp);
          if (!idx.is_number_unsigned() || idx.get<std::size_t>() >= phones.size()) {
            ctx.fail(mp + ".index", fmt::format("expected an index below {}", phones.size()));
          }
          auto& phone = r.phones[first + idx.get<std::size_t>()];
          const std::string canon = ctx.symbol(ctx.member(mis[k], "canonical-phone", mp), mp + ".canonical-phone");
          if (canon != phone.canonical) {
            ctx.fail(mp + ".canonical-phone", fmt::format("'{}' but the word has '{}' there", canon, phone.canonical));
          }
          phone.realized = ctx.symbol(ctx.member(mis[k], "pronounced-phone", mp), mp + ".pronounced-phone");
        }
      }
    }
    r.utterance = {ctx.number(utt, "accuracy", ""), ctx.number(utt, "completeness", ""), ctx.number(utt, "fluency", ""),
                   ctx.number(utt, "prosodic", ""), ctx.number(utt, "total", "")};
    try {
      validate_record(r);
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("{}: {}", source, e.what()));
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<UtteranceRecord> import_speechocean(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("{}: cannot open", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_speechocean(ss.str(), path.string());
}

}  // namespace jcapt::data
