#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace rapid::detail {

template <typename T>
T read_le(std::span<const std::byte> bytes, std::size_t offset) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= U(std::to_integer<std::uint8_t>(bytes[offset + i])) << (8 * i);
  }
  return std::bit_cast<T>(u);
}

template <typename T>
void append_le(std::vector<std::byte>& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U u = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(std::byte((u >> (8 * i)) & 0xFF));
}

}  // namespace rapid::detail
