#pragma once

#include <stdexcept>
#include <string>

namespace tpot {

// Error categories map one-to-one onto the C API status codes and CLI exit codes.
enum class ErrorKind {
  Internal,
  Validation,  // malformed input data or out-of-range values
  Contract,    // violated precondition (dimension mismatch, empty input, ...)
  Missing,     // required artifact (checkpoint, archive) does not exist
  Backend,     // embedding backend unreachable or misbehaving
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

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::Contract, what);
}

}  // namespace tpot
