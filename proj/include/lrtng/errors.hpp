#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lrtng {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An interval operation was applied outside its domain (division by an
/// interval containing zero, ln of a non-positive interval, tan across a pole).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Conformability or argument-validity violation by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Model or initial-set text could not be parsed.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// The a priori enclosure could not be verified or a remainder bound was not
/// finite; the fixed step size is too large for this region of state space.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// A coordinate frame became singular or too ill-conditioned to certify.
class FrameDegeneracyError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check that guards soundness failed (for example an
/// empty ball/ellipsoid intersection).
class SoundnessError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrtng
