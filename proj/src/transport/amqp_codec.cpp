#include "mqbench/transport/amqp_codec.hpp"

namespace mqbench::transport::amqp {

bool Reader::u8(std::uint8_t& v) {
  if (pos_ + 1 > b_.size()) return false;
  v = b_[pos_++];
  return true;
}

bool Reader::u16(std::uint16_t& v) {
  if (pos_ + 2 > b_.size()) return false;
  v = static_cast<std::uint16_t>((b_[pos_] << 8) | b_[pos_ + 1]);
  pos_ += 2;
  return true;
}

bool Reader::u32(std::uint32_t& v) {
  if (pos_ + 4 > b_.size()) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | b_[pos_++];
  return true;
}

bool Reader::u64(std::uint64_t& v) {
  if (pos_ + 8 > b_.size()) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | b_[pos_++];
  return true;
}

bool Reader::shortstr(std::string& s) {
  std::uint8_t len = 0;
  if (!u8(len) || pos_ + len > b_.size()) return false;
  s.assign(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
           b_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
  pos_ += len;
  return true;
}

std::vector<std::uint8_t> encode_frame(std::uint8_t type, std::uint16_t channel,
                                       const std::vector<std::uint8_t>& payload) {
  Writer w;
  w.u8(type);
  w.u16(channel);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
  w.u8(0xCE);
  return w.take();
}

std::vector<std::uint8_t> method_frame(std::uint16_t channel,
                                       std::uint16_t class_id,
                                       std::uint16_t method_id, Writer args) {
  Writer w;
  w.u16(class_id);
  w.u16(method_id);
  w.bytes(args.take());
  return encode_frame(1, channel, w.take());
}

void FrameParser::feed(const std::uint8_t* data, std::size_t n) {
  buf_.insert(buf_.end(), data, data + n);
}

std::optional<Frame> FrameParser::next() {
  if (buf_.size() < 7) return std::nullopt;
  const std::uint32_t size = (std::uint32_t(buf_[3]) << 24) |
                             (std::uint32_t(buf_[4]) << 16) |
                             (std::uint32_t(buf_[5]) << 8) | buf_[6];
  const std::size_t total = 7 + std::size_t(size) + 1;
  if (buf_.size() < total) return std::nullopt;
  if (buf_[total - 1] != 0xCE) {
    corrupt_ = true;
    return std::nullopt;
  }
  Frame f;
  f.type = buf_[0];
  f.channel = static_cast<std::uint16_t>((buf_[1] << 8) | buf_[2]);
  f.payload.assign(buf_.begin() + 7,
                   buf_.begin() + static_cast<std::ptrdiff_t>(total - 1));
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
  return f;
}

}  // namespace mqbench::transport::amqp
