#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emot {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or stream. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration value or parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor or weight shapes that do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Kalman innovation covariance lost positive definiteness.
class FilterDivergence : public Error {
 public:
  using Error::Error;
};

}  // namespace emot
