#include "mqbench/core/header.hpp"

#include <cstring>

namespace mqbench {

namespace {

void put_u32_be(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 24);
  out[1] = static_cast<std::uint8_t>(v >> 16);
  out[2] = static_cast<std::uint8_t>(v >> 8);
  out[3] = static_cast<std::uint8_t>(v);
}

void put_u64_be(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
  }
}

std::uint32_t get_u32_be(const std::uint8_t* in) {
  return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
         (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

std::uint64_t get_u64_be(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

}  // namespace

std::array<std::uint8_t, kHeaderSize> encode_header(const MessageHeader& h) {
  std::array<std::uint8_t, kHeaderSize> out{};
  std::memcpy(out.data(), kHeaderMagic.data(), kHeaderMagic.size());
  put_u32_be(out.data() + 4, h.version_flags);
  put_u64_be(out.data() + 8, h.seq);
  put_u64_be(out.data() + 16, h.send_ts_ns);
  return out;
}

Result<MessageHeader> decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    return make_error(errc::malformed_header,
                      "header needs 24 bytes, got " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kHeaderMagic.data(), kHeaderMagic.size()) != 0) {
    return make_error(errc::malformed_header, "magic mismatch");
  }
  MessageHeader h;
  h.version_flags = get_u32_be(bytes.data() + 4);
  h.seq = get_u64_be(bytes.data() + 8);
  h.send_ts_ns = get_u64_be(bytes.data() + 16);
  return h;
}

Result<std::vector<std::uint8_t>> build_payload(const MessageHeader& h,
                                                std::size_t total_bytes) {
  if (total_bytes < kHeaderSize) {
    return make_error(errc::payload_too_small,
                      "payload must hold the 24-byte header, got " +
                          std::to_string(total_bytes));
  }
  std::vector<std::uint8_t> out(total_bytes, kFillerByte);
  const auto head = encode_header(h);
  std::memcpy(out.data(), head.data(), head.size());
  return out;
}

}  // namespace mqbench
