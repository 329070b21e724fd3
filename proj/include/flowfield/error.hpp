#pragma once

#include <stdexcept>
#include <string>

namespace flowfield {

/// Error classes surfaced by the library. The CLI maps each class to a
/// fixed process exit code (see exit_code()).
enum class ErrorKind {
  Usage,       // 2
  Validation,  // 3
  Io,          // 4
  Numeric,     // 5
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::Numeric, what) {}
};

int exit_code(ErrorKind kind) noexcept;
const char* to_string(ErrorKind kind) noexcept;

}  // namespace flowfield
