#include "samdh/crc32.hpp"

#include <array>

namespace samdh {
namespace {

constexpr std::uint32_t kReflectedPoly = 0xEDB88320u;

constexpr std::array<std::uint32_t, 256> make_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t n = 0; n < 256; ++n) {
    std::uint32_t c = n;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? (c >> 1) ^ kReflectedPoly : c >> 1;
    table[n] = c;
  }
  return table;
}

constexpr auto kTable = make_table();

// Polynomial arithmetic modulo the CRC polynomial, reflected bit order:
// bit 31 holds x^0.
std::uint32_t multmodp(std::uint32_t a, std::uint32_t b) noexcept {
  std::uint32_t m = 1u << 31;
  std::uint32_t p = 0;
  for (;;) {
    if (a & m) {
      p ^= b;
      if ((a & (m - 1)) == 0) break;
    }
    m >>= 1;
    b = (b & 1u) ? (b >> 1) ^ kReflectedPoly : b >> 1;
  }
  return p;
}

// x^(2^k) mod p for k = 0..31
std::array<std::uint32_t, 32> make_x2n_table() {
  std::array<std::uint32_t, 32> t{};
  std::uint32_t p = 1u << 30;  // x^1
  t[0] = p;
  for (std::size_t n = 1; n < t.size(); ++n) t[n] = p = multmodp(p, p);
  return t;
}

// x^(n * 2^k) mod p
std::uint32_t x2nmodp(std::uint64_t n, unsigned k) noexcept {
  static const auto table = make_x2n_table();
  std::uint32_t p = 1u << 31;  // x^0
  while (n) {
    if (n & 1u) p = multmodp(table[k & 31u], p);
    n >>= 1;
    ++k;
  }
  return p;
}

}  // namespace

std::uint32_t crc32_update(std::uint32_t crc, std::span<const std::byte> data) noexcept {
  std::uint32_t c = crc ^ 0xFFFFFFFFu;
  for (std::byte b : data) c = kTable[(c ^ static_cast<std::uint32_t>(b)) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::uint32_t crc32(std::span<const std::byte> data) noexcept { return crc32_update(0, data); }

std::uint32_t crc32(std::string_view text) noexcept {
  return crc32(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::uint32_t crc32_bitflip_delta(std::uint64_t length, std::uint64_t bit_index) noexcept {
  const std::uint64_t byte_index = bit_index / 8;
  if (byte_index >= length) return 0;
  const std::uint32_t reg = kTable[1u << (bit_index % 8)];
  return multmodp(x2nmodp(length - 1 - byte_index, 3), reg);
}

}  // namespace samdh
