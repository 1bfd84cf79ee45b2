#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "mqbench/transport/transport.hpp"
#include "support/stub_servers.hpp"

using namespace mqbench;
using namespace mqbench::transport;
using namespace mqbench::testsupport;

namespace {

bool wait_until(const std::function<bool()>& pred, int timeout_ms = 3000) {
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return pred();
}

TransportOptions opts(std::string id) {
  TransportOptions o;
  o.client_id = std::move(id);
  return o;
}

std::string endpoint_of(const char* scheme, std::uint16_t port) {
  return std::string(scheme) + "://127.0.0.1:" + std::to_string(port);
}

// Collects deliveries for one subscriber.
struct Collector {
  std::mutex mu;
  std::vector<std::vector<std::uint8_t>> payloads;
  std::vector<std::string> topics;

  MessageSink sink() {
    return [this](std::string_view topic, std::span<const std::uint8_t> p,
                  std::uint64_t ts) {
      CHECK(ts > 0);
      std::lock_guard lock(mu);
      topics.emplace_back(topic);
      payloads.emplace_back(p.begin(), p.end());
    };
  }

  std::size_t count() {
    std::lock_guard lock(mu);
    return payloads.size();
  }
};

void check_qos_refused(Session& s) {
  const std::uint8_t b[1] = {0};
  CHECK(s.publish("t", b, QosLevel::at_least_once).code() ==
        errc::unsupported_qos);
  CHECK(s.publish("t", b, QosLevel::exactly_once).code() ==
        errc::unsupported_qos);
  CHECK(s.subscribe("t", QosLevel::at_least_once,
                    [](std::string_view, std::span<const std::uint8_t>,
                       std::uint64_t) {})
            .code() == errc::unsupported_qos);
}

// Bytes that break naive text framing: embedded CRLF, NUL, high bit.
const std::vector<std::uint8_t> kAwkwardPayload = {
    'a', '\r', '\n', 0x00, 0xFF, 'M', 'S', 'G', ' ', '\n', 0x80, 'z'};

}  // namespace

TEST_CASE("nats: dead endpoint fails fast") {
  net::IoRuntime io(2);
  auto o = opts("n0");
  o.connect_timeout_ms = 300;
  auto r = connect(io, TransportKind::nats, "tcp://127.0.0.1:9", std::move(o));
  CHECK(r.code() == errc::connect_failed);
  io.stop();
}

TEST_CASE("nats: handshake, binary-safe roundtrip, qos refusal") {
  NatsStub stub;
  net::IoRuntime io(2);
  auto log = std::make_shared<ConnectionLog>();
  auto so = opts("n-sub");
  so.events = log;
  auto sub = connect(io, TransportKind::nats,
                     endpoint_of("tcp", stub.port()), std::move(so));
  REQUIRE(sub.ok());
  auto pub = connect(io, TransportKind::nats,
                     endpoint_of("tcp", stub.port()), opts("n-pub"));
  REQUIRE(pub.ok());
  CHECK(sub.value()->kind() == TransportKind::nats);
  CHECK(sub.value()->connected());
  CHECK(log->size() == 1);

  Collector got;
  REQUIRE(sub.value()
              ->subscribe("bench/0", QosLevel::at_most_once, got.sink())
              .ok());
  REQUIRE(wait_until([&] { return stub.sub_count() == 1; }));

  REQUIRE(pub.value()
              ->publish("bench/0", kAwkwardPayload, QosLevel::at_most_once)
              .ok());
  REQUIRE(wait_until([&] { return got.count() == 1; }));
  {
    std::lock_guard lock(got.mu);
    CHECK(got.payloads[0] == kAwkwardPayload);
    CHECK(got.topics[0] == "bench/0");
  }

  check_qos_refused(*pub.value());
  io.stop();
  stub.stop();
}

TEST_CASE("nats: reconnect restores subscriptions") {
  NatsStub stub;
  net::IoRuntime io(2);
  auto log = std::make_shared<ConnectionLog>();
  auto so = opts("n-re");
  so.events = log;
  auto sub = connect(io, TransportKind::nats,
                     endpoint_of("tcp", stub.port()), std::move(so));
  REQUIRE(sub.ok());
  auto pub = connect(io, TransportKind::nats,
                     endpoint_of("tcp", stub.port()), opts("n-re-pub"));
  REQUIRE(pub.ok());

  Collector got;
  REQUIRE(
      sub.value()->subscribe("s", QosLevel::at_most_once, got.sink()).ok());
  REQUIRE(wait_until([&] { return stub.sub_count() == 1; }));

  sub.value()->disconnect();
  REQUIRE(wait_until([&] { return !sub.value()->connected(); }));
  REQUIRE(sub.value()->reconnect().ok());
  CHECK(sub.value()->connected());
  REQUIRE(wait_until([&] { return stub.sub_count() == 2; }));  // re-SUB

  const std::vector<std::uint8_t> m = {'x'};
  REQUIRE(pub.value()->publish("s", m, QosLevel::at_most_once).ok());
  REQUIRE(wait_until([&] { return got.count() == 1; }));

  auto events = log->snapshot();
  REQUIRE(events.size() == 3);
  CHECK(events[0].kind == ConnectionEventKind::connect);
  CHECK(events[1].kind == ConnectionEventKind::disconnect);
  CHECK(events[2].kind == ConnectionEventKind::reconnect);
  io.stop();
  stub.stop();
}

TEST_CASE("resp: auth, roundtrip, channel isolation") {
  RespStub stub;
  net::IoRuntime io(2);
  auto so = opts("r-sub");
  so.credentials = Credentials{"default", "hunter2"};
  auto sub = connect(io, TransportKind::resp,
                     endpoint_of("tcp", stub.port()), std::move(so));
  REQUIRE(sub.ok());
  CHECK(stub.auth_count() == 1);
  auto pub = connect(io, TransportKind::resp,
                     endpoint_of("tcp", stub.port()), opts("r-pub"));
  REQUIRE(pub.ok());
  CHECK(sub.value()->kind() == TransportKind::resp);

  Collector ch_a;
  Collector ch_b;
  REQUIRE(sub.value()->subscribe("a", QosLevel::at_most_once, ch_a.sink()).ok());
  REQUIRE(sub.value()->subscribe("b", QosLevel::at_most_once, ch_b.sink()).ok());
  REQUIRE(wait_until([&] { return stub.sub_count() == 2; }));

  REQUIRE(pub.value()->publish("a", kAwkwardPayload, QosLevel::at_most_once).ok());
  REQUIRE(wait_until([&] { return ch_a.count() == 1; }));
  {
    std::lock_guard lock(ch_a.mu);
    CHECK(ch_a.payloads[0] == kAwkwardPayload);
    CHECK(ch_a.topics[0] == "a");
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  CHECK(ch_b.count() == 0);

  check_qos_refused(*pub.value());
  io.stop();
  stub.stop();
}

TEST_CASE("resp: reconnect restores subscriptions") {
  RespStub stub;
  net::IoRuntime io(2);
  auto sub = connect(io, TransportKind::resp,
                     endpoint_of("tcp", stub.port()), opts("r-re"));
  REQUIRE(sub.ok());
  auto pub = connect(io, TransportKind::resp,
                     endpoint_of("tcp", stub.port()), opts("r-re-pub"));
  REQUIRE(pub.ok());

  Collector got;
  REQUIRE(sub.value()->subscribe("c", QosLevel::at_most_once, got.sink()).ok());
  REQUIRE(wait_until([&] { return stub.sub_count() == 1; }));

  sub.value()->disconnect();
  REQUIRE(wait_until([&] { return !sub.value()->connected(); }));
  REQUIRE(sub.value()->reconnect().ok());
  REQUIRE(wait_until([&] { return stub.sub_count() == 2; }));

  const std::vector<std::uint8_t> m = {'y'};
  REQUIRE(pub.value()->publish("c", m, QosLevel::at_most_once).ok());
  REQUIRE(wait_until([&] { return got.count() == 1; }));
  io.stop();
  stub.stop();
}

TEST_CASE("amqp: declare/bind/consume handshake and fanout routing") {
  AmqpStub stub;
  net::IoRuntime io(2);
  auto s1 = connect(io, TransportKind::amqp,
                    endpoint_of("amqp", stub.port()), opts("a1"));
  REQUIRE(s1.ok());
  auto s2 = connect(io, TransportKind::amqp,
                    endpoint_of("amqp", stub.port()), opts("a2"));
  REQUIRE(s2.ok());
  auto pub = connect(io, TransportKind::amqp,
                     endpoint_of("amqp", stub.port()), opts("a-pub"));
  REQUIRE(pub.ok());
  CHECK(s1.value()->kind() == TransportKind::amqp);

  Collector c1;
  Collector c2;
  Collector other;
  // subscribe blocks through queue.declare/bind/consume, so no settle wait.
  REQUIRE(s1.value()
              ->subscribe("bench/fanout", QosLevel::at_most_once, c1.sink())
              .ok());
  REQUIRE(s2.value()
              ->subscribe("bench/fanout", QosLevel::at_most_once, c2.sink())
              .ok());
  REQUIRE(s2.value()
              ->subscribe("bench/other", QosLevel::at_most_once, other.sink())
              .ok());
  CHECK(stub.consumer_count() == 3);

  REQUIRE(pub.value()
              ->publish("bench/fanout", kAwkwardPayload, QosLevel::at_most_once)
              .ok());
  REQUIRE(wait_until([&] { return c1.count() == 1 && c2.count() == 1; }));
  {
    std::lock_guard lock(c1.mu);
    CHECK(c1.payloads[0] == kAwkwardPayload);
    CHECK(c1.topics[0] == "bench/fanout");
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  CHECK(other.count() == 0);

  check_qos_refused(*pub.value());
  io.stop();
  stub.stop();
}

TEST_CASE("amqp: empty and large payloads survive frame chunking") {
  AmqpStub stub;
  net::IoRuntime io(2);
  auto sub = connect(io, TransportKind::amqp,
                     endpoint_of("amqp", stub.port()), opts("a-big"));
  REQUIRE(sub.ok());
  auto pub = connect(io, TransportKind::amqp,
                     endpoint_of("amqp", stub.port()), opts("a-big-pub"));
  REQUIRE(pub.ok());

  Collector got;
  REQUIRE(sub.value()->subscribe("big", QosLevel::at_most_once, got.sink()).ok());

  REQUIRE(pub.value()->publish("big", {}, QosLevel::at_most_once).ok());
  std::vector<std::uint8_t> large(200 * 1024);
  for (std::size_t i = 0; i < large.size(); ++i) {
    large[i] = static_cast<std::uint8_t>(i * 31);
  }
  REQUIRE(pub.value()->publish("big", large, QosLevel::at_most_once).ok());

  REQUIRE(wait_until([&] { return got.count() == 2; }, 8000));
  {
    std::lock_guard lock(got.mu);
    CHECK(got.payloads[0].empty());
    CHECK(got.payloads[1] == large);
  }
  io.stop();
  stub.stop();
}

TEST_CASE("zenoh: rest probe, sse roundtrip, fanout") {
  ZenohRestStub stub;
  net::IoRuntime io(2);
  auto s1 = connect(io, TransportKind::zenoh,
                    endpoint_of("zenoh", stub.port()), opts("z1"));
  REQUIRE(s1.ok());
  auto s2 = connect(io, TransportKind::zenoh,
                    endpoint_of("zenoh", stub.port()), opts("z2"));
  REQUIRE(s2.ok());
  auto pub = connect(io, TransportKind::zenoh,
                     endpoint_of("zenoh", stub.port()), opts("z-pub"));
  REQUIRE(pub.ok());
  CHECK(s1.value()->kind() == TransportKind::zenoh);

  Collector c1;
  Collector c2;
  REQUIRE(s1.value()
              ->subscribe("bench/fanout", QosLevel::at_most_once, c1.sink())
              .ok());
  REQUIRE(s2.value()
              ->subscribe("bench/fanout", QosLevel::at_most_once, c2.sink())
              .ok());
  CHECK(stub.sub_count() == 2);

  REQUIRE(pub.value()
              ->publish("bench/fanout", kAwkwardPayload, QosLevel::at_most_once)
              .ok());
  REQUIRE(wait_until([&] { return c1.count() == 1 && c2.count() == 1; }));
  {
    std::lock_guard lock(c1.mu);
    CHECK(c1.payloads[0] == kAwkwardPayload);  // base64 wrapping is lossless
    CHECK(c1.topics[0] == "bench/fanout");
  }
  CHECK(stub.put_count() == 1);

  check_qos_refused(*pub.value());
  io.stop();
  stub.stop();
}

TEST_CASE("zenoh: sequential puts share the control connection") {
  ZenohRestStub stub;
  net::IoRuntime io(2);
  auto sub = connect(io, TransportKind::zenoh,
                     endpoint_of("zenoh", stub.port()), opts("z-seq"));
  REQUIRE(sub.ok());
  auto pub = connect(io, TransportKind::zenoh,
                     endpoint_of("zenoh", stub.port()), opts("z-seq-pub"));
  REQUIRE(pub.ok());

  Collector got;
  REQUIRE(sub.value()->subscribe("k", QosLevel::at_most_once, got.sink()).ok());

  for (int i = 0; i < 20; ++i) {
    const std::uint8_t b[1] = {static_cast<std::uint8_t>(i)};
    REQUIRE(pub.value()->publish("k", b, QosLevel::at_most_once).ok());
  }
  REQUIRE(wait_until([&] { return got.count() == 20; }, 8000));
  {
    std::lock_guard lock(got.mu);
    for (int i = 0; i < 20; ++i) {
      CHECK(got.payloads[static_cast<std::size_t>(i)] ==
            std::vector<std::uint8_t>{static_cast<std::uint8_t>(i)});
    }
  }
  CHECK(stub.put_count() == 20);
  io.stop();
  stub.stop();
}

TEST_CASE("zenoh: reconnect reopens the event stream") {
  ZenohRestStub stub;
  net::IoRuntime io(2);
  auto sub = connect(io, TransportKind::zenoh,
                     endpoint_of("zenoh", stub.port()), opts("z-re"));
  REQUIRE(sub.ok());
  auto pub = connect(io, TransportKind::zenoh,
                     endpoint_of("zenoh", stub.port()), opts("z-re-pub"));
  REQUIRE(pub.ok());

  Collector got;
  REQUIRE(sub.value()->subscribe("rk", QosLevel::at_most_once, got.sink()).ok());
  CHECK(stub.sub_count() == 1);

  sub.value()->disconnect();
  REQUIRE(wait_until([&] { return !sub.value()->connected(); }));
  REQUIRE(sub.value()->reconnect().ok());
  REQUIRE(wait_until([&] { return stub.sub_count() == 2; }));

  const std::uint8_t b[1] = {7};
  REQUIRE(pub.value()->publish("rk", b, QosLevel::at_most_once).ok());
  REQUIRE(wait_until([&] { return got.count() == 1; }));
  io.stop();
  stub.stop();
}
