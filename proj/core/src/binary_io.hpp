#pragma once

// Little-endian byte packing shared by the weight and dataset file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iqnet/errors.hpp"

namespace iqnet::detail {

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

class ByteWriter {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_arithmetic_v<U>);
    if constexpr (std::is_floating_point_v<U>) {
      using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
      put_int(std::bit_cast<Bits>(value));
    } else {
      put_int(static_cast<std::make_unsigned_t<U>>(value));
    }
  }

  void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  void put_string16(std::string_view s) {
    if (s.size() > 0xFFFF) throw FormatError("string too long for u16 length prefix");
    put(static_cast<std::uint16_t>(s.size()));
    put_bytes(s);
  }

  /// Appends a CRC32 of everything written so far and returns it.
  std::uint32_t put_crc() {
    const auto crc = crc32(buf_.data(), buf_.size());
    put(crc);
    return crc;
  }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

  void write_file(const std::filesystem::path& path) const;

 private:
  template <typename U>
  void put_int(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes, std::string what)
      : buf_(std::move(bytes)), what_(std::move(what)) {}

  static ByteReader from_file(const std::filesystem::path& path, std::string what);

  template <typename U>
  U get() {
    static_assert(std::is_arithmetic_v<U>);
    if constexpr (std::is_floating_point_v<U>) {
      using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
      return std::bit_cast<U>(get_int<Bits>());
    } else {
      return static_cast<U>(get_int<std::make_unsigned_t<U>>());
    }
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::string get_string16() { return get_bytes(get<std::uint16_t>()); }

  /// Checks that the last four bytes are a CRC32 of everything before them
  /// and hides the trailer from further reads. Returns the checksum.
  std::uint32_t verify_crc();

  std::size_t remaining() const { return end_ - pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + ": " + msg);
  }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) fail("truncated file");
  }

  template <typename U>
  U get_int() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }

  std::vector<std::uint8_t> buf_;
  std::string what_;
  std::size_t pos_ = 0;
  std::size_t end_ = buf_.size();
};

}  // namespace iqnet::detail
