#include "robusta/binary_io.hpp"

#include <fstream>
#include <iterator>
#include <limits>

namespace robusta {

void ByteWriter::str16(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ContractError("io", "string too long for u16 length prefix");
  }
  u16(static_cast<std::uint16_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    fail("truncated payload: need " + std::to_string(n) + " bytes, have " +
         std::to_string(remaining()));
  }
}

void ByteReader::fail(const std::string& what) const {
  throw FormatError(module_, what + " (offset " + std::to_string(pos_) + ")");
}

void ByteReader::expect_magic(std::string_view tag) {
  need(tag.size());
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (data_[pos_ + i] != static_cast<std::uint8_t>(tag[i])) {
      fail("bad magic, expected \"" + std::string(tag) + "\"");
    }
  }
  pos_ += tag.size();
}

std::vector<float> ByteReader::f32s(std::size_t count) {
  if (count > remaining() / 4) {
    fail("truncated payload: matrix of " + std::to_string(count) +
         " floats does not fit");
  }
  std::vector<float> out(count);
  for (auto& v : out) v = f32();
  return out;
}

std::vector<std::uint8_t> ByteReader::bytes(std::size_t count) {
  need(count);
  std::vector<std::uint8_t> out(data_.begin() + pos_,
                                data_.begin() + pos_ + count);
  pos_ += count;
  return out;
}

std::string ByteReader::str16() {
  const auto len = u16();
  need(len);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
  pos_ += len;
  return s;
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    fail("trailing bytes after declared payload: " +
         std::to_string(remaining()));
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path,
                                          const std::string& module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(module, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(module, "read failed for " + path.string());
  return data;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> data,
                      const std::string& module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(module, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError(module, "write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace robusta
