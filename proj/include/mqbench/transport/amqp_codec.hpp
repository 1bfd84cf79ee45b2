#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// AMQP 0-9-1 framing: the slice needed for direct-exchange pub/sub.
namespace mqbench::transport::amqp {

constexpr std::uint16_t kClassConnection = 10;
constexpr std::uint16_t kClassChannel = 20;
constexpr std::uint16_t kClassExchange = 40;
constexpr std::uint16_t kClassQueue = 50;
constexpr std::uint16_t kClassBasic = 60;

struct Frame {
  std::uint8_t type = 0;  // 1 method, 2 header, 3 body, 8 heartbeat
  std::uint16_t channel = 0;
  std::vector<std::uint8_t> payload;
};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void shortstr(std::string_view s) {
    u8(static_cast<std::uint8_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void longstr(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void empty_table() { u32(0); }
  void bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  bool u8(std::uint8_t& v);
  bool u16(std::uint16_t& v);
  bool u32(std::uint32_t& v);
  bool u64(std::uint64_t& v);
  bool shortstr(std::string& s);

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_frame(std::uint8_t type, std::uint16_t channel,
                                       const std::vector<std::uint8_t>& payload);
std::vector<std::uint8_t> method_frame(std::uint16_t channel,
                                       std::uint16_t class_id,
                                       std::uint16_t method_id, Writer args);

class FrameParser {
 public:
  void feed(const std::uint8_t* data, std::size_t n);
  std::optional<Frame> next();
  bool corrupt() const { return corrupt_; }

 private:
  std::vector<std::uint8_t> buf_;
  bool corrupt_ = false;
};

}  // namespace mqbench::transport::amqp
