#include "jcapt/data/records.hpp"

#include <fmt/format.h>

#include <json.hpp>

#include "jcapt/data/scores.hpp"
#include "jcapt/errors.hpp"

namespace jcapt::data {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, 5> kUtteranceKeys = {"accuracy", "completeness", "fluency", "prosody", "total"};

class Reader {
 public:
  Reader(std::string_view where, std::string id) : where_(where), id_(std::move(id)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw FormatError(fmt::format("{}: record '{}' field '{}': {}", where_, id_, field, what));
  }

  const json& member(const json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
    return *it;
  }

  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }

  std::string string(const json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  std::size_t index(const json& v, const std::string& field) const {
    if (!v.is_number_unsigned()) fail(field, "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

 private:
  std::string where_;
  std::string id_;
};

void check_range(const Reader& rd, double v, double hi, const std::string& field) {
  if (!(v >= 0.0 && v <= hi)) rd.fail(field, fmt::format("{} outside [0, {}]", v, hi));
}

void validate_at(const UtteranceRecord& r, std::string_view where);

}  // namespace

UtteranceRecord parse_record(std::string_view line, std::string_view where) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: invalid JSON: {}", where, e.what()));
  }
  UtteranceRecord r;
  {
    Reader anon(where, "?");
    r.id = anon.string(anon.member(j, "id", ""), "id");
  }
  Reader rd(where, r.id);

  const json& phones = rd.member(j, "phones", "");
  if (!phones.is_array()) rd.fail("phones", "expected an array");
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const std::string path = fmt::format("phones[{}]", i);
    const json& p = phones[i];
    r.phones.push_back({rd.string(rd.member(p, "canonical", path), path + ".canonical"),
                        rd.string(rd.member(p, "realized", path), path + ".realized"),
                        rd.number(rd.member(p, "score", path), path + ".score"),
                        rd.index(rd.member(p, "word", path), path + ".word")});
  }

  const json& words = rd.member(j, "words", "");
  if (!words.is_array()) rd.fail("words", "expected an array");
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::string path = fmt::format("words[{}]", w);
    r.words.push_back({rd.number(rd.member(words[w], "accuracy", path), path + ".accuracy"),
                       rd.number(rd.member(words[w], "stress", path), path + ".stress"),
                       rd.number(rd.member(words[w], "total", path), path + ".total")});
  }

  const json& utt = rd.member(j, "utterance", "");
  for (std::size_t a = 0; a < kUtteranceKeys.size(); ++a) {
    r.utterance[a] = rd.number(rd.member(utt, kUtteranceKeys[a], "utterance"), std::string("utterance.") + kUtteranceKeys[a]);
  }

  const json& feats = rd.member(j, "features", "");
  if (feats.contains("rows")) {
    const json& rows = feats["rows"];
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) {
      rd.fail("features.rows", "expected a nonempty array of nonempty rows");
    }
    Tensor t = Tensor::matrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != t.cols()) rd.fail(fmt::format("features.rows[{}]", i), "ragged row");
      for (std::size_t c = 0; c < t.cols(); ++c) t(i, c) = rd.number(rows[i][c], fmt::format("features.rows[{}][{}]", i, c));
    }
    r.inline_features = std::move(t);
  } else {
    r.feature_key = rd.string(rd.member(feats, "key", "features"), "features.key");
  }
  validate_at(r, where);
  return r;
}

std::string serialize_record(const UtteranceRecord& r) {
  json j;
  j["id"] = r.id;
  json phones = json::array();
  for (const auto& p : r.phones) {
    phones.push_back(json{{"canonical", p.canonical}, {"realized", p.realized}, {"score", p.score}, {"word", p.word}});
  }
  j["phones"] = std::move(phones);
  json words = json::array();
  for (const auto& w : r.words) words.push_back(json{{"accuracy", w.accuracy}, {"stress", w.stress}, {"total", w.total}});
  j["words"] = std::move(words);
  json utt = json::object();
  for (std::size_t a = 0; a < kUtteranceKeys.size(); ++a) utt[kUtteranceKeys[a]] = r.utterance[a];
  j["utterance"] = std::move(utt);
  if (r.inline_features) {
    json rows = json::array();
    for (std::size_t i = 0; i < r.inline_features->rows(); ++i) {
      auto row = r.inline_features->row(i);
      rows.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    j["features"] = json{{"rows", std::move(rows)}};
  } else {
    j["features"] = json{{"key", r.feature_key}};
  }
  return j.dump();
}

namespace {

void validate_at(const UtteranceRecord& r, std::string_view where) {
  Reader rd(where, r.id);
  if (r.id.empty()) rd.fail("id", "empty");
  if (r.phones.empty()) rd.fail("phones", "no phones");
  std::size_t expect_word = 0;
  for (std::size_t i = 0; i < r.phones.size(); ++i) {
    const auto& p = r.phones[i];
    const std::string path = fmt::format("phones[{}]", i);
    auto canon = features::PhoneInventory::find(p.canonical);
    if (!canon || !features::PhoneInventory::is_real_phone(*canon)) {
      rd.fail(path + ".canonical", fmt::format("'{}' is not a phone", p.canonical));
    }
    if (!features::PhoneInventory::find(p.realized)) {
      rd.fail(path + ".realized", fmt::format("'{}' is not in the inventory", p.realized));
    }
    check_range(rd, p.score, score_range(ScoreLevel::phone), path + ".score");
    if (i == 0 ? p.word != 0 : (p.word != expect_word && p.word != expect_word + 1)) {
      rd.fail(path + ".word", fmt::format("word index {} breaks contiguity", p.word));
    }
    expect_word = p.word;
  }
  if (r.words.size() != expect_word + 1) {
    rd.fail("words", fmt::format("{} word score entries for {} words", r.words.size(), expect_word + 1));
  }
  for (std::size_t w = 0; w < r.words.size(); ++w) {
    const std::string path = fmt::format("words[{}]", w);
    check_range(rd, r.words[w].accuracy, 10.0, path + ".accuracy");
    check_range(rd, r.words[w].stress, 10.0, path + ".stress");
    check_range(rd, r.words[w].total, 10.0, path + ".total");
  }
  for (std::size_t a = 0; a < kUtteranceKeys.size(); ++a) {
    check_range(rd, r.utterance[a], 10.0, std::string("utterance.") + kUtteranceKeys[a]);
  }
  if (!r.inline_features && r.feature_key.empty()) rd.fail("features", "neither rows nor key");
}

}  // namespace

void validate_record(const UtteranceRecord& r) { validate_at(r, "record"); }

Utterance to_utterance(const UtteranceRecord& r, Tensor features) {
  validate_record(r);
  if (features.rank() != 2 || features.rows() != r.phones.size()) {
    throw IntegrityError(fmt::format("record '{}': {} phones but {} feature rows", r.id, r.phones.size(),
                                     features.rank() == 2 ? features.rows() : 0));
  }
  Utterance u;
  u.id = r.id;
  for (const auto& p : r.phones) {
    u.canonical.push_back(features::PhoneInventory::id(p.canonical));
    u.realized.push_back(features::PhoneInventory::id(p.realized));
    u.word_of_phone.push_back(p.word);
    u.phone_scores.push_back(normalize(p.score, ScoreLevel::phone));
  }
  u.word_scores = Tensor::matrix(r.words.size(), scoring::kWordScoreCount);
  for (std::size_t w = 0; w < r.words.size(); ++w) {
    u.word_scores(w, 0) = normalize(r.words[w].accuracy, ScoreLevel::word);
    u.word_scores(w, 1) = normalize(r.words[w].stress, ScoreLevel::word);
    u.word_scores(w, 2) = normalize(r.words[w].total, ScoreLevel::word);
  }
  for (std::size_t a = 0; a < 5; ++a) u.utterance_scores[a] = normalize(r.utterance[a], ScoreLevel::utterance);
  u.features = std::move(features);
  return u;
}

UtteranceRecord to_record(const Utterance& u, bool inline_features) {
  UtteranceRecord r;
  r.id = u.id;
  for (std::size_t i = 0; i < u.size(); ++i) {
    r.phones.push_back({std::string(features::PhoneInventory::symbol(u.canonical[i])),
                        std::string(features::PhoneInventory::symbol(u.realized[i])),
                        denormalize(u.phone_scores[i], ScoreLevel::phone), u.word_of_phone[i]});
  }
  for (std::size_t w = 0; w < u.word_scores.rows(); ++w) {
    r.words.push_back({denormalize(u.word_scores(w, 0), ScoreLevel::word), denormalize(u.word_scores(w, 1), ScoreLevel::word),
                       denormalize(u.word_scores(w, 2), ScoreLevel::word)});
  }
  for (std::size_t a = 0; a < 5; ++a) r.utterance[a] = denormalize(u.utterance_scores[a], ScoreLevel::utterance);
  if (inline_features) {
    r.inline_features = u.features;
  } else {
    r.feature_key = u.id;
  }
  return r;
}

}  // namespace jcapt::data
