#include "mitoforge/error.hpp"

namespace mitoforge {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::MissingTargets: return "MissingTargets";
    case ErrorKind::AlignmentError: return "AlignmentError";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace mitoforge
