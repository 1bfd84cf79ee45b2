#pragma once

#include <cstdint>
#include <string>

#include "mqbench/result.hpp"

namespace mqbench::net {

struct Uri {
  std::string scheme;
  std::string username;
  std::string password;
  std::string host;
  std::uint16_t port = 0;
  std::string path;  // leading '/' stripped; empty when absent
};

// Parses scheme://[user:pass@]host[:port][/path]. IPv6 literals use
// brackets: tcp://[::1]:1883. Missing ports resolve to 0; the caller
// supplies scheme defaults.
Result<Uri> parse_uri(const std::string& text);

}  // namespace mqbench::net
