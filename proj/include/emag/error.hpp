#pragma once

#include <stdexcept>
#include <string>

namespace emag {

enum class ErrorKind {
  invalid_argument,  // malformed input
  unauthorized,
  not_found,
  conflict,
  contract,  // well-formed but violates a domain rule
  io,
  internal,
};

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

}  // namespace emag
