#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace samdh {

/// Standard CRC-32 (IEEE 802.3): reflected polynomial 0xEDB88320
/// (0x04C11DB7 normal form), init 0xFFFFFFFF, final XOR 0xFFFFFFFF.
std::uint32_t crc32(std::span<const std::byte> data) noexcept;
std::uint32_t crc32(std::string_view text) noexcept;

/// Streaming form: `crc32_update(crc32_update(0, a), b) == crc32(a ++ b)`.
std::uint32_t crc32_update(std::uint32_t crc, std::span<const std::byte> data) noexcept;

/// XOR difference a single flipped bit makes to the CRC of a message of
/// `length` bytes. `bit_index` counts from the first byte, LSB first.
/// crc32(m with bit flipped) == crc32(m) ^ crc32_bitflip_delta(length, bit_index).
/// Lets the transfer engine derive the checksum of corrupted content without
/// materializing it.
std::uint32_t crc32_bitflip_delta(std::uint64_t length, std::uint64_t bit_index) noexcept;

}  // namespace samdh
