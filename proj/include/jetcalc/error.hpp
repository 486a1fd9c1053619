#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jetcalc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Evaluation left the domain of an elementary function (log of a
/// non-positive number, division by zero, non-finite result).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Checked integer arithmetic overflowed.
class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace jetcalc
