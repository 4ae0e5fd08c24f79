#pragma once

// Little-endian encode/decode over byte buffers, independent of host order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

namespace urbanseg::detail {

template <typename T>
void put_le(std::uint8_t* dst, T value) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<std::uint8_t>(bits >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* src) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(src[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

/// Append-only little-endian writer.
class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    std::size_t at = buf_.size();
    buf_.resize(at + sizeof(T));
    put_le(buf_.data() + at, value);
  }
  void put_bytes(std::string_view s, std::size_t width) {
    std::size_t at = buf_.size();
    buf_.resize(at + width, 0);
    std::memcpy(buf_.data() + at, s.data(), std::min(width, s.size()));
  }
  void pad(std::size_t count) { buf_.resize(buf_.size() + count, 0); }
  std::vector<std::uint8_t>& bytes() { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace urbanseg::detail
