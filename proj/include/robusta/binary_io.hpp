#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robusta/error.hpp"

namespace robusta {

/// Little-endian byte sink shared by every on-disk format.
class ByteWriter {
 public:
  void bytes(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
  }
  void magic(std::string_view tag) {
    buf_.insert(buf_.end(), tag.begin(), tag.end());
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void f32s(std::span<const float> v) {
    for (float x : v) f32(x);
  }
  void str16(std::string_view s);

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader. Running past the end raises a
/// FormatError tagged with `module`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string module)
      : data_(data), module_(std::move(module)) {}

  void expect_magic(std::string_view tag);
  std::uint8_t u8() { return get_le<std::uint8_t>(); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::vector<float> f32s(std::size_t count);
  std::vector<std::uint8_t> bytes(std::size_t count);
  std::string str16();

  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const;
  [[noreturn]] void fail(const std::string& what) const;

 private:
  void need(std::size_t n) const;
  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string module_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path,
                                          const std::string& module);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> data,
                      const std::string& module);

/// 64-bit FNV-1a, used for config hashes embedded in artifact headers.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace robusta
