#pragma once

#include <stdexcept>
#include <string>

namespace sshg {

/// Category of a failure; the command line tool maps these onto exit codes.
enum class ErrorKind {
  config,
  resolution,
  shape,
  domain,
  spectral_gap,
  ill_posed,
  conditioning,
  precondition,
  capacity,
  parameter,
  format,
  compatibility,
  internal,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace sshg
