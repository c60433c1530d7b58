#pragma once

#include <stdexcept>
#include <string>

namespace vpc {

// Error families surfaced through the C API as negative status codes.
enum class ErrorKind {
  invalid_argument,   // bad parameters, validation failures
  io,                 // file access / parse problems
  numerical,          // singularities, blow-up, line-search failure
  state,              // operation sequencing (missing data)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace vpc
