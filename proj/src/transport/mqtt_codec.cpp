#include "mqbench/transport/mqtt_codec.hpp"

#include <cstring>

namespace mqbench::transport::mqtt {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_remaining_length(std::vector<std::uint8_t>& out, std::uint32_t len) {
  do {
    std::uint8_t byte = len % 128;
    len /= 128;
    if (len > 0) byte |= 0x80;
    out.push_back(byte);
  } while (len > 0);
}

std::vector<std::uint8_t> frame(PacketType type, std::uint8_t flags,
                                const std::vector<std::uint8_t>& body) {
  std::vector<std::uint8_t> out;
  out.reserve(body.size() + 5);
  out.push_back(static_cast<std::uint8_t>(
      (static_cast<std::uint8_t>(type) << 4) | (flags & 0x0F)));
  put_remaining_length(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Error protocol_error(const char* what) {
  return make_error(errc::io_error, std::string("mqtt: ") + what);
}

class BodyReader {
 public:
  explicit BodyReader(const std::vector<std::uint8_t>& body) : body_(body) {}

  bool u8(std::uint8_t& v) {
    if (pos_ + 1 > body_.size()) return false;
    v = body_[pos_++];
    return true;
  }
  bool u16(std::uint16_t& v) {
    if (pos_ + 2 > body_.size()) return false;
    v = static_cast<std::uint16_t>((body_[pos_] << 8) | body_[pos_ + 1]);
    pos_ += 2;
    return true;
  }
  bool str(std::string& v) {
    std::uint16_t len = 0;
    if (!u16(len) || pos_ + len > body_.size()) return false;
    v.assign(body_.begin() + static_cast<std::ptrdiff_t>(pos_),
             body_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return true;
  }
  std::vector<std::uint8_t> rest() {
    std::vector<std::uint8_t> v(body_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                body_.end());
    pos_ = body_.size();
    return v;
  }
  bool done() const { return pos_ == body_.size(); }

 private:
  const std::vector<std::uint8_t>& body_;
  std::size_t pos_ = 0;
};

}  // namespace

void FrameSplitter::feed(const std::uint8_t* data, std::size_t n) {
  buf_.insert(buf_.end(), data, data + n);
}

std::optional<Packet> FrameSplitter::next() {
  if (corrupt_ || buf_.size() < 2) return std::nullopt;

  std::uint32_t remaining = 0;
  std::uint32_t multiplier = 1;
  std::size_t len_bytes = 0;
  while (true) {
    if (1 + len_bytes >= buf_.size()) return std::nullopt;  // length incomplete
    const std::uint8_t byte = buf_[1 + len_bytes];
    remaining += (byte & 0x7F) * multiplier;
    ++len_bytes;
    if ((byte & 0x80) == 0) break;
    if (len_bytes == 4) {
      corrupt_ = true;
      return std::nullopt;
    }
    multiplier *= 128;
  }

  const std::size_t total = 1 + len_bytes + remaining;
  if (buf_.size() < total) return std::nullopt;

  Packet p;
  const std::uint8_t first = buf_[0];
  p.type = static_cast<PacketType>(first >> 4);
  p.flags = first & 0x0F;
  p.body.assign(buf_.begin() + static_cast<std::ptrdiff_t>(1 + len_bytes),
                buf_.begin() + static_cast<std::ptrdiff_t>(total));
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
  return p;
}

std::vector<std::uint8_t> encode_connect(const ConnectFields& f) {
  std::vector<std::uint8_t> body;
  put_string(body, "MQTT");
  body.push_back(f.protocol_level);
  std::uint8_t connect_flags = 0;
  if (f.clean_session) connect_flags |= 0x02;
  if (f.username) connect_flags |= 0x80;
  if (f.password) connect_flags |= 0x40;
  body.push_back(connect_flags);
  put_u16(body, f.keepalive_s);
  put_string(body, f.client_id);
  if (f.username) put_string(body, *f.username);
  if (f.password) put_string(body, *f.password);
  return frame(PacketType::connect, 0, body);
}

std::vector<std::uint8_t> encode_connack(const ConnackFields& f) {
  return frame(PacketType::connack, 0,
               {static_cast<std::uint8_t>(f.session_present ? 1 : 0),
                f.return_code});
}

std::vector<std::uint8_t> encode_publish(const PublishFields& f) {
  std::vector<std::uint8_t> body;
  put_string(body, f.topic);
  if (f.qos > 0) put_u16(body, f.packet_id);
  body.insert(body.end(), f.payload.begin(), f.payload.end());
  std::uint8_t flags = static_cast<std::uint8_t>(f.qos << 1);
  if (f.dup) flags |= 0x08;
  if (f.retain) flags |= 0x01;
  return frame(PacketType::publish, flags, body);
}

std::vector<std::uint8_t> encode_ack(PacketType type, std::uint16_t packet_id) {
  std::vector<std::uint8_t> body;
  put_u16(body, packet_id);
  // PUBREL requires reserved flags 0010.
  const std::uint8_t flags = type == PacketType::pubrel ? 0x02 : 0x00;
  return frame(type, flags, body);
}

std::vector<std::uint8_t> encode_subscribe(const SubscribeFields& f) {
  std::vector<std::uint8_t> body;
  put_u16(body, f.packet_id);
  for (const auto& [topic, qos] : f.topics) {
    put_string(body, topic);
    body.push_back(qos);
  }
  return frame(PacketType::subscribe, 0x02, body);
}

std::vector<std::uint8_t> encode_suback(std::uint16_t packet_id,
                                        const std::vector<std::uint8_t>& codes) {
  std::vector<std::uint8_t> body;
  put_u16(body, packet_id);
  body.insert(body.end(), codes.begin(), codes.end());
  return frame(PacketType::suback, 0, body);
}

std::vector<std::uint8_t> encode_simple(PacketType type) {
  return frame(type, 0, {});
}

Result<ConnectFields> decode_connect(const Packet& p) {
  BodyReader r(p.body);
  ConnectFields f;
  std::string proto;
  std::uint8_t connect_flags = 0;
  if (!r.str(proto) || !r.u8(f.protocol_level) || !r.u8(connect_flags) ||
      !r.u16(f.keepalive_s) || !r.str(f.client_id)) {
    return protocol_error("truncated CONNECT");
  }
  if (proto != "MQTT" && proto != "MQIsdp") {
    return protocol_error("unknown protocol name in CONNECT");
  }
  f.clean_session = (connect_flags & 0x02) != 0;
  if (connect_flags & 0x04) {  // will flag: skip will topic + message
    std::string will_topic;
    if (!r.str(will_topic)) return protocol_error("truncated CONNECT will");
    std::uint16_t will_len = 0;
    if (!r.u16(will_len)) return protocol_error("truncated CONNECT will");
    for (std::uint16_t i = 0; i < will_len; ++i) {
      std::uint8_t b = 0;
      if (!r.u8(b)) return protocol_error("truncated CONNECT will");
    }
  }
  if (connect_flags & 0x80) {
    std::string u;
    if (!r.str(u)) return protocol_error("truncated CONNECT username");
    f.username = std::move(u);
  }
  if (connect_flags & 0x40) {
    std::string pw;
    if (!r.str(pw)) return protocol_error("truncated CONNECT password");
    f.password = std::move(pw);
  }
  return f;
}

Result<ConnackFields> decode_connack(const Packet& p) {
  if (p.body.size() != 2) return protocol_error("bad CONNACK length");
  return ConnackFields{(p.body[0] & 0x01) != 0, p.body[1]};
}

Result<PublishFields> decode_publish(const Packet& p) {
  BodyReader r(p.body);
  PublishFields f;
  f.qos = (p.flags >> 1) & 0x03;
  f.dup = (p.flags & 0x08) != 0;
  f.retain = (p.flags & 0x01) != 0;
  if (f.qos > 2) return protocol_error("bad PUBLISH qos");
  if (!r.str(f.topic)) return protocol_error("truncated PUBLISH topic");
  if (f.qos > 0 && !r.u16(f.packet_id)) {
    return protocol_error("truncated PUBLISH packet id");
  }
  f.payload = r.rest();
  return f;
}

Result<std::uint16_t> decode_packet_id(const Packet& p) {
  // PUBACK-family bodies are exactly the id; SUBACK appends return codes.
  if (p.body.size() < 2) return protocol_error("bad ack length");
  return static_cast<std::uint16_t>((p.body[0] << 8) | p.body[1]);
}

Result<SubscribeFields> decode_subscribe(const Packet& p) {
  BodyReader r(p.body);
  SubscribeFields f;
  if (!r.u16(f.packet_id)) return protocol_error("truncated SUBSCRIBE");
  while (!r.done()) {
    std::string topic;
    std::uint8_t qos = 0;
    if (!r.str(topic) || !r.u8(qos)) {
      return protocol_error("truncated SUBSCRIBE entry");
    }
    f.topics.emplace_back(std::move(topic), qos);
  }
  if (f.topics.empty()) return protocol_error("SUBSCRIBE without topics");
  return f;
}

}  // namespace mqbench::transport::mqtt
