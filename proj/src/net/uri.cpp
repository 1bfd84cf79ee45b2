#include "mqbench/net/uri.hpp"

#include <charconv>

namespace mqbench::net {

Result<Uri> parse_uri(const std::string& text) {
  const auto sep = text.find("://");
  if (sep == std::string::npos || sep == 0) {
    return make_error(errc::invalid_spec, "endpoint missing scheme: " + text);
  }
  Uri u;
  u.scheme = text.substr(0, sep);

  std::string rest = text.substr(sep + 3);
  if (const auto slash = rest.find('/'); slash != std::string::npos) {
    u.path = rest.substr(slash + 1);
    rest = rest.substr(0, slash);
  }
  if (const auto at = rest.rfind('@'); at != std::string::npos) {
    const std::string cred = rest.substr(0, at);
    rest = rest.substr(at + 1);
    const auto colon = cred.find(':');
    u.username = cred.substr(0, colon);
    if (colon != std::string::npos) u.password = cred.substr(colon + 1);
  }

  std::string port_text;
  if (!rest.empty() && rest.front() == '[') {
    const auto close = rest.find(']');
    if (close == std::string::npos) {
      return make_error(errc::invalid_spec, "unterminated IPv6 literal: " + text);
    }
    u.host = rest.substr(1, close - 1);
    if (close + 1 < rest.size()) {
      if (rest[close + 1] != ':') {
        return make_error(errc::invalid_spec, "malformed authority: " + text);
      }
      port_text = rest.substr(close + 2);
    }
  } else if (const auto colon = rest.rfind(':'); colon != std::string::npos) {
    u.host = rest.substr(0, colon);
    port_text = rest.substr(colon + 1);
  } else {
    u.host = rest;
  }

  if (u.host.empty()) {
    return make_error(errc::invalid_spec, "endpoint missing host: " + text);
  }
  if (!port_text.empty()) {
    std::uint32_t port = 0;
    const auto [ptr, ec] = std::from_chars(
        port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() ||
        port > 0xFFFF) {
      return make_error(errc::invalid_spec, "bad port in endpoint: " + text);
    }
    u.port = static_cast<std::uint16_t>(port);
  }
  return u;
}

}  // namespace mqbench::net
