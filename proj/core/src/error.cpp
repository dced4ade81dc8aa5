#include "cohort/error.hpp"

namespace cohort {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input-error";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::empty_pattern: return "empty-pattern";
    case ErrorKind::calibration_degenerate: return "calibration-degenerate";
    case ErrorKind::conflict: return "conflict";
  }
  return "unknown";
}

}  // namespace cohort
