#pragma once

#include <stdexcept>
#include <string>

namespace mitoforge {

enum class ErrorKind {
  InvalidInput,
  MissingTargets,
  AlignmentError,
  DegenerateLabels,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind()` drives CLI exit codes.
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
  if (!cond) fail(ErrorKind::InvalidInput, what);
}

}  // namespace mitoforge
