#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mqbench/result.hpp"

namespace mqbench {

inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::array<std::uint8_t, 4> kHeaderMagic = {'M', 'Q', 'B', 'N'};
/// Header version 1 in the high byte, flag bits unused so far.
inline constexpr std::uint32_t kHeaderVersion1 = 0x01000000u;
inline constexpr std::uint8_t kFillerByte = 0xAB;

/// 24-byte binary preamble carried at the front of every payload.
/// Layout (big-endian): magic[4] | version_flags u32 | seq u64 | send_ts_ns u64.
struct MessageHeader {
  std::uint32_t version_flags = kHeaderVersion1;
  std::uint64_t seq = 0;
  std::uint64_t send_ts_ns = 0;

  bool operator==(const MessageHeader&) const = default;
};

std::array<std::uint8_t, kHeaderSize> encode_header(const MessageHeader& h);

/// Parses the first 24 bytes; trailing payload padding is ignored.
/// Fails with malformed_header on short input or magic mismatch.
Result<MessageHeader> decode_header(std::span<const std::uint8_t> bytes);

/// Header followed by 0xAB filler up to total_bytes.
Result<std::vector<std::uint8_t>> build_payload(const MessageHeader& h,
                                                std::size_t total_bytes);

}  // namespace mqbench
