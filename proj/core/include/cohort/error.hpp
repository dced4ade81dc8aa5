#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cohort {

/// Failure categories. Each maps onto one CLI exit code and one HTTP status.
enum class ErrorKind {
  input,                 // malformed file, bad argument, out-of-range parameter
  not_found,             // unknown patient, log, or session
  empty_pattern,         // nothing frequent at the requested threshold
  calibration_degenerate,
  conflict,              // operation not valid in the current session phase
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cohort
