#pragma once

#include <stdexcept>
#include <string>

namespace d2nn {

/// Broad failure categories. The C API and the CLI exit codes are derived
/// from these.
enum class ErrorKind {
  InvalidArgument,  // caller broke a precondition
  Data,             // malformed or inconsistent input file / dataset
  Io,               // could not open, read or write a path
  Numeric,          // non-finite values during compute
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

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace d2nn
