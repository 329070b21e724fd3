#include "flowfield/error.hpp"

namespace flowfield {

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what), kind_(kind) {}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
      return 2;
    case ErrorKind::Validation:
      return 3;
    case ErrorKind::Io:
      return 4;
    case ErrorKind::Numeric:
      return 5;
  }
  return 1;
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
      return "usage";
    case ErrorKind::Validation:
      return "validation";
    case ErrorKind::Io:
      return "io";
    case ErrorKind::Numeric:
      return "numeric";
  }
  return "unknown";
}

}  // namespace flowfield
