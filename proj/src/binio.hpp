#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace toploc::detail {

// Little-endian binary stream helpers. Readers track the byte offset and
// report it in every parse error. Float arrays are raw IEEE-754 bytes.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }

  void bytes(const void* data, std::size_t len) {
    f_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!f_) throw std::runtime_error("write failure on '" + path_ + "'");
  }

  void magic(std::string_view m) { bytes(m.data(), m.size()); }

  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }

  void f32_array(std::span<const float> v) { bytes(v.data(), v.size() * sizeof(float)); }

  void u64_array(std::span<const std::uint64_t> v) {
    for (std::uint64_t x : v) u64(x);
  }

  void close() {
    f_.close();
    if (!f_) throw std::runtime_error("write failure closing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream f_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error("cannot open '" + path + "' for reading");
    f_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(f_.tellg());
    f_.seekg(0);
  }

  std::uint64_t offset() const noexcept { return offset_; }
  std::uint64_t file_size() const noexcept { return size_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("parse error in '" + path_ + "' at byte offset " +
                             std::to_string(offset_) + ": " + what);
  }

  void bytes(void* out, std::size_t len) {
    if (offset_ + len > size_) fail("truncated file (need " + std::to_string(len) + " bytes)");
    f_.read(static_cast<char*>(out), static_cast<std::streamsize>(len));
    if (!f_) fail("read failure");
    offset_ += len;
  }

  void expect_magic(std::string_view m) {
    std::vector<char> got(m.size());
    bytes(got.data(), got.size());
    if (std::string_view(got.data(), got.size()) != m) {
      offset_ -= m.size();
      fail("bad magic, expected \"" + std::string(m) + "\"");
    }
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  void f32_array(std::span<float> out) { bytes(out.data(), out.size() * sizeof(float)); }

  void u64_array(std::span<std::uint64_t> out) {
    for (auto& x : out) x = u64();
  }

  void expect_eof() {
    if (offset_ != size_) fail("trailing bytes (" + std::to_string(size_ - offset_) + ")");
  }

 private:
  std::string path_;
  std::ifstream f_;
  std::uint64_t size_ = 0;
  std::uint64_t offset_ = 0;
};

}  // namespace toploc::detail
