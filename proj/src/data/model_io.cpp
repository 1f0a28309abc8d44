#include "jcapt/data/model_io.hpp"

#include <boost/crc.hpp>
#include <fmt/format.h>

#include "binary_io.hpp"
#include "jcapt/data/scores.hpp"
#include "jcapt/errors.hpp"

namespace jcapt::data {

namespace {

constexpr std::array<ScoreLevel, 3> kLevels = {ScoreLevel::phone, ScoreLevel::word, ScoreLevel::utterance};

std::uint32_t crc32(const unsigned char* p, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(p, n);
  return crc.checksum();
}

}  // namespace

void save_model(const model::JcaptModel& m, const std::filesystem::path& path) {
  const auto& cfg = m.config();
  const auto& e = cfg.encoder;
  ByteWriter w;
  w.bytes(kModelMagic.data(), kModelMagic.size());
  w.u32(kModelVersion);
  for (std::size_t v : {e.d_model, e.d_state, e.expand, e.n_layers, e.conv_width, e.think_tokens}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(e.combine));
  w.u32(static_cast<std::uint32_t>(e.scan));
  w.u32(static_cast<std::uint32_t>(cfg.feature_dim));
  w.u32(static_cast<std::uint32_t>(cfg.d_attn));
  w.u32(m.table().checksum());
  for (auto level : kLevels) w.f64(score_range(level));

  const auto& params = m.params().all();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p.value.data()) w.f64(v);
  }
  w.u32(crc32(w.buffer().data(), w.size()));
  w.save(path);
}

model::JcaptModel load_model(const std::filesystem::path& path, const features::PhonologicalTable& table) {
  ByteReader r(read_file(path), path.string());
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kModelMagic) r.fail("bad magic; not a model file");
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion) r.fail(fmt::format("unsupported model version {} (expected {})", version, kModelVersion));

  if (r.size() < 16) r.fail("truncated (no checksum)");
  ByteReader tail = r.at(r.size() - 4);
  const std::uint32_t stored = tail.u32("checksum");
  const std::uint32_t actual = crc32(r.raw(), r.size() - 4);
  if (stored != actual) {
    r.fail(fmt::format("checksum mismatch (stored {:08x}, computed {:08x}); file is truncated or corrupt", stored, actual));
  }

  model::ModelConfig cfg;
  auto& e = cfg.encoder;
  for (std::size_t* v : {&e.d_model, &e.d_state, &e.expand, &e.n_layers, &e.conv_width, &e.think_tokens}) {
    *v = r.u32("encoder config");
  }
  const std::uint32_t combine = r.u32("combine mode"), scan = r.u32("scan mode");
  if (combine > static_cast<std::uint32_t>(ssm::Combine::sum)) r.fail(fmt::format("unknown combine mode {}", combine));
  if (scan > static_cast<std::uint32_t>(ssm::ScanMode::parallel)) r.fail(fmt::format("unknown scan mode {}", scan));
  e.combine = static_cast<ssm::Combine>(combine);
  e.scan = static_cast<ssm::ScanMode>(scan);
  cfg.feature_dim = r.u32("feature_dim");
  cfg.d_attn = r.u32("d_attn");
  try {
    cfg.validate();
  } catch (const ConfigError& err) {
    r.fail(fmt::format("stored config is invalid: {}", err.what()));
  }

  const std::uint32_t table_sum = r.u32("table checksum");
  if (table_sum != table.checksum()) {
    r.fail(fmt::format("phonological table checksum {:08x} differs from the loaded table's {:08x}; "
                       "the model was trained against another table",
                       table_sum, table.checksum()));
  }
  for (auto level : kLevels) {
    const double range = r.f64("score range");
    if (range != score_range(level)) {
      r.fail(fmt::format("score range {} does not match this build's {}", range, score_range(level)));
    }
  }

  model::JcaptModel m(cfg, table, 0);
  auto& store = m.params();
  const std::uint32_t count = r.u32("parameter count");
  if (count != store.size()) r.fail(fmt::format("{} parameters stored, config implies {}", count, store.size()));
  for (diff::ParamId id = 0; id < store.size(); ++id) {
    auto& p = store[id];
    const std::string name = r.str("parameter name");
    if (name != p.name) r.fail(fmt::format("parameter {} is '{}', expected '{}'", id, name, p.name));
    const std::uint32_t rank = r.u32("parameter rank");
    diff::Shape shape(rank);
    for (auto& d : shape) d = r.u32("parameter dim");
    if (shape != p.value.shape()) {
      r.fail(fmt::format("parameter '{}' has shape {}, expected {}", name, diff::shape_str(shape),
                         diff::shape_str(p.value.shape())));
    }
    for (auto& v : p.value.vec()) v = r.f64("parameter data");
  }
  if (r.position() != r.size() - 4) r.fail("trailing bytes after the parameters");
  return m;
}

}  // namespace jcapt::data
