#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedgest {

enum class Errc {
  range,
  domain,
  dimension,
  empty,
  bad_magic,
  bad_version,
  truncated,
  checksum,
  io,
  protocol,
  schema,
  order,
  network,
  client_failed,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. Every failure raised by fedgest carries a code so
/// callers (and tests) can tell e.g. a bad magic from a truncated payload.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fedgest
