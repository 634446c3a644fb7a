#pragma once

#include <stdexcept>
#include <string>

namespace heatdim {

/// Root of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};
class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class WindowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class CutoffError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class TailError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class InsufficientLevels : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Input/model construction failures (CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};
class SizeError : public InputError {
 public:
  using InputError::InputError;
};
class CoeffError : public InputError {
 public:
  using InputError::InputError;
};
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace heatdim
