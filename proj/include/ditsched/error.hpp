#pragma once

#include <stdexcept>
#include <string>

namespace ditsched {

/// Error categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  Usage = 2,     // bad flags or subcommand
  Config = 3,    // invalid parameter values
  Io = 4,        // file could not be opened / written
  Format = 5,    // malformed CSV / JSON input
  Lookup = 6,    // missing profile entry or unknown resolution
  Capacity = 7,  // oracle size guard tripped
  Internal = 8,  // broken invariant inside the scheduler
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ditsched
