#pragma once

// Little-endian u32/f32 encoding shared by every binary format in the
// project. Internal header.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catalyst/error.hpp"

namespace catalyst::detail {

inline constexpr std::uint32_t kFormatVersion = 1;

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_f64s(std::vector<unsigned char>& out, std::span<const double> values) {
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_f32s(std::vector<unsigned char>& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
    out.insert(out.end(), bytes, bytes + values.size_bytes());
  } else {
    for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
}

inline void get_f32s(const unsigned char* p, std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), p, out.size_bytes());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    }
  }
}

// Header: 4-byte magic, u32 version, then `fields` u32 values.
inline std::vector<unsigned char> make_header(std::string_view magic,
                                              std::initializer_list<std::uint32_t> fields) {
  std::vector<unsigned char> out(magic.begin(), magic.end());
  put_u32(out, kFormatVersion);
  for (std::uint32_t f : fields) put_u32(out, f);
  return out;
}

inline void write_file(const std::filesystem::path& path,
                       std::span<const unsigned char> bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary | std::ios::ate);
  if (!file) throw Error(ErrorCode::kIo, "cannot open: " + path.string());
  const auto size = static_cast<std::size_t>(file.tellg());
  std::vector<unsigned char> bytes(size);
  file.seekg(0);
  file.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!file) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return bytes;
}

// Cursor over an in-memory file; every read is bounds-checked.
class Reader {
 public:
  Reader(std::span<const unsigned char> bytes, std::string label)
      : bytes_(bytes), label_(std::move(label)) {}

  void expect_magic(std::string_view magic) {
    need(4);
    if (std::memcmp(bytes_.data(), magic.data(), 4) != 0) {
      throw Error(ErrorCode::kBadMagic, "bad magic in " + label_ + " (expected " +
                                            std::string(magic) + ")");
    }
    pos_ += 4;
  }

  std::uint32_t u32() {
    need(4);
    const std::uint32_t v = get_u32(bytes_.data() + pos_);
    pos_ += 4;
    return v;
  }

  void f32s(std::span<float> out) {
    need(out.size() * 4);
    get_f32s(bytes_.data() + pos_, out);
    pos_ += out.size() * 4;
  }

  double f64() {
    need(8);
    const double v = std::bit_cast<double>(get_u64(bytes_.data() + pos_));
    pos_ += 8;
    return v;
  }

  void f64s(std::span<double> out) {
    need(out.size() * 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::bit_cast<double>(get_u64(bytes_.data() + pos_ + 8 * i));
    }
    pos_ += out.size() * 8;
  }

  std::span<const unsigned char> bytes(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void expect_end() const {
    if (remaining() != 0) {
      throw Error(ErrorCode::kInvalidValue,
                  label_ + " has " + std::to_string(remaining()) + " trailing bytes");
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated, label_ + " is truncated");
    }
  }

  std::span<const unsigned char> bytes_;
  std::string label_;
  std::size_t pos_ = 0;
};

}  // namespace catalyst::detail
