#include "jcapt/data/feature_file.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "jcapt/errors.hpp"

namespace jcapt::data {

const diff::Tensor& FeatureFile::at(const std::string& id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw FormatError(fmt::format("feature container has no matrix for '{}'", id));
  return matrices[static_cast<std::size_t>(it - ids.begin())];
}

void FeatureFile::add(std::string id, diff::Tensor m) {
  ids.push_back(std::move(id));
  matrices.push_back(std::move(m));
}

void round_to_float(diff::Tensor& t) {
  for (auto& v : t.vec()) v = static_cast<double>(static_cast<float>(v));
}

void write_feature_file(const std::filesystem::path& path, const FeatureFile& f) {
  ByteWriter w;
  w.bytes(kFeatureMagic.data(), kFeatureMagic.size());
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(f.ids.size()));
  std::vector<std::uint64_t> offsets;
  for (const auto& m : f.matrices) {
    offsets.push_back(w.size());
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) w.f32(static_cast<float>(v));
  }
  const std::uint64_t index_offset = w.size();
  for (std::size_t i = 0; i < f.ids.size(); ++i) {
    w.str(f.ids[i]);
    w.u64(offsets[i]);
  }
  w.u64(index_offset);
  w.save(path);
}

FeatureFile read_feature_file(const std::filesystem::path& path) {
  ByteReader r(read_file(path), path.string());
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kFeatureMagic) r.fail("bad magic; not a feature container");
  const std::uint32_t version = r.u32("version");
  if (version != kFeatureVersion) r.fail(fmt::format("unsupported version {} (expected {})", version, kFeatureVersion));
  const std::uint32_t count = r.u32("record count");

  if (r.size() < 8) r.fail("truncated (no trailer)");
  ByteReader tail = r.at(r.size() - 8);
  const std::uint64_t index_offset = tail.u64("index offset");
  if (index_offset > r.size() - 8) r.fail("index offset past end of file");

  FeatureFile f;
  std::unordered_set<std::string> seen;
  ByteReader idx = r.at(index_offset);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id = idx.str("index id");
    const std::uint64_t off = idx.u64("index offset");
    if (off >= index_offset) r.fail(fmt::format("record '{}' offset {} outside payload", id, off));
    if (!seen.insert(id).second) r.fail(fmt::format("duplicate id '{}'", id));
    ByteReader rec = r.at(off);
    const std::uint32_t rows = rec.u32("rows"), cols = rec.u32("cols");
    if (rows == 0 || cols == 0) r.fail(fmt::format("record '{}' has zero dimension {}x{}", id, rows, cols));
    const std::uint64_t need = std::uint64_t(rows) * cols * 4;
    if (rec.position() + need > index_offset) {
      r.fail(fmt::format("record '{}' declares {}x{} but the payload is shorter", id, rows, cols));
    }
    diff::Tensor m = diff::Tensor::matrix(rows, cols);
    for (auto& v : m.vec()) v = rec.f32("data");
    f.add(std::move(id), std::move(m));
  }
  if (idx.position() != r.size() - 8) r.fail("index table size does not match the record count");
  return f;
}

}  // namespace jcapt::data
