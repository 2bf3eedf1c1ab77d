#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace helpsense {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A message was emitted out of originating-time order.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// A stream graph was wired incorrectly (unknown name, duplicate, type mismatch).
class WiringError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A text file failed to parse. `line()` is 1-based; 0 when not line-specific.
class ParseError : public DataError {
 public:
  ParseError(const std::string& origin, std::size_t line, const std::string& what)
      : DataError(origin + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A model could not be trained or applied.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace helpsense
