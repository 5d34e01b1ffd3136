#pragma once

#include <stdexcept>
#include <string>

namespace mrtele {

/// Bad numeric input to a pure operation (negative current, NaN angle, size mismatch).
using InvalidArgument = std::invalid_argument;

/// Torque request at or beyond the clutch's asymptotic torque.
class SaturationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Curve fitting could not produce a model (degenerate samples).
class FitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario/config validation failure. `key()` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Malformed input text. Line is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrtele
