#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mqbench/result.hpp"

// MQTT 3.1.1 (protocol level 4) wire codec: the subset needed for
// benchmark clients and the built-in mini broker.
namespace mqbench::transport::mqtt {

enum class PacketType : std::uint8_t {
  connect = 1,
  connack = 2,
  publish = 3,
  puback = 4,
  pubrec = 5,
  pubrel = 6,
  pubcomp = 7,
  subscribe = 8,
  suback = 9,
  unsubscribe = 10,
  unsuback = 11,
  pingreq = 12,
  pingresp = 13,
  disconnect = 14,
};

struct Packet {
  PacketType type{};
  std::uint8_t flags = 0;
  std::vector<std::uint8_t> body;
};

// Accumulates raw bytes and yields complete control packets. A protocol
// violation (bad remaining-length encoding) poisons the splitter; the
// connection must be dropped.
class FrameSplitter {
 public:
  void feed(const std::uint8_t* data, std::size_t n);
  std::optional<Packet> next();
  bool corrupt() const { return corrupt_; }

 private:
  std::vector<std::uint8_t> buf_;
  bool corrupt_ = false;
};

struct ConnectFields {
  std::string client_id;
  bool clean_session = true;
  std::uint16_t keepalive_s = 0;
  std::uint8_t protocol_level = 4;
  std::optional<std::string> username;
  std::optional<std::string> password;
};

struct ConnackFields {
  bool session_present = false;
  std::uint8_t return_code = 0;  // 0 = accepted
};

struct PublishFields {
  std::string topic;
  std::uint16_t packet_id = 0;  // meaningful for qos > 0
  std::uint8_t qos = 0;
  bool dup = false;
  bool retain = false;
  std::vector<std::uint8_t> payload;
};

struct SubscribeFields {
  std::uint16_t packet_id = 0;
  std::vector<std::pair<std::string, std::uint8_t>> topics;  // filter, qos
};

std::vector<std::uint8_t> encode_connect(const ConnectFields& f);
std::vector<std::uint8_t> encode_connack(const ConnackFields& f);
std::vector<std::uint8_t> encode_publish(const PublishFields& f);
std::vector<std::uint8_t> encode_ack(PacketType type, std::uint16_t packet_id);
std::vector<std::uint8_t> encode_subscribe(const SubscribeFields& f);
std::vector<std::uint8_t> encode_suback(std::uint16_t packet_id,
                                        const std::vector<std::uint8_t>& codes);
std::vector<std::uint8_t> encode_simple(PacketType type);  // ping*, disconnect

Result<ConnectFields> decode_connect(const Packet& p);
Result<ConnackFields> decode_connack(const Packet& p);
Result<PublishFields> decode_publish(const Packet& p);
Result<std::uint16_t> decode_packet_id(const Packet& p);  // ack family
Result<SubscribeFields> decode_subscribe(const Packet& p);

}  // namespace mqbench::transport::mqtt
