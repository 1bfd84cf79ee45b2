#pragma once

#include <cassert>
#include <string>
#include <utility>
#include <variant>

namespace mqbench {

enum class errc {
  ok = 0,
  // core
  malformed_header,
  payload_too_small,
  invalid_spec,
  // transport
  connect_failed,
  unsupported_scheme,
  not_connected,
  unsupported_qos,
  publish_timeout,
  bind_failed,
  aborted_by_transport,
  // metrics
  empty_sample_set,
  no_events,
  unknown_topic,
  non_monotonic_time,
  // resource monitor / container engine
  container_not_found,
  endpoint_unreachable,
  image_unavailable,
  start_failed,
  readiness_timeout,
  // fault injection
  proxy_not_found,
  admin_unreachable,
  // generic
  io_error,
  bad_config,
};

const char* errc_name(errc c);

struct Error {
  errc code = errc::ok;
  std::string message;
};

inline Error make_error(errc code, std::string message) {
  return Error{code, std::move(message)};
}

/// Value-or-error return type used by all fallible operations.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Error err) : v_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() {
    assert(ok());
    return std::get<T>(v_);
  }
  const T& value() const {
    assert(ok());
    return std::get<T>(v_);
  }
  T take() {
    assert(ok());
    return std::move(std::get<T>(v_));
  }
  const Error& error() const {
    assert(!ok());
    return std::get<Error>(v_);
  }
  errc code() const { return ok() ? errc::ok : error().code; }

 private:
  std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error err) : err_(std::move(err)) {}

  bool ok() const { return err_.code == errc::ok; }
  explicit operator bool() const { return ok(); }
  const Error& error() const {
    assert(!ok());
    return err_;
  }
  errc code() const { return err_.code; }

 private:
  Error err_;
};

}  // namespace mqbench
