#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "jcapt/errors.hpp"

// Little-endian byte buffers shared by the feature container and model files.
namespace jcapt::data {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("{}: cannot open", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<unsigned char>& buffer() const { return buf_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("{}: cannot open for writing", path.string()));
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw FormatError(fmt::format("{}: write failed", path.string()));
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<unsigned char> data, std::string source)
      : data_(std::make_shared<std::vector<unsigned char>>(std::move(data))), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(fmt::format("{}: {}", source_, what)); }

  std::size_t size() const { return data_->size(); }
  std::size_t position() const { return pos_; }
  const unsigned char* raw() const { return data_->data(); }

  // Reader over the same bytes starting at `offset`.
  ByteReader at(std::size_t offset) const {
    if (offset > size()) fail(fmt::format("offset {} past end of file ({} bytes)", offset, size()));
    ByteReader r = *this;
    r.pos_ = offset;
    return r;
  }

  void bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, data_->data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(data_->data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > size() - pos_) fail(fmt::format("truncated while reading {} at offset {}", what, pos_));
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t((*data_)[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::shared_ptr<std::vector<unsigned char>> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace jcapt::data
