#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or index outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A sequence violates the weight contract (value below 1, or decreasing).
class WeightError : public Error {
 public:
  using Error::Error;
};

/// Malformed weight-expression text. Carries the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " at byte " + std::to_string(offset)), offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ergolab
