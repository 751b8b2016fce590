#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frogpred {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stream spec that cannot describe a valid stream (rate outside [0,1], empty bits, ...).
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed the fixed-width index or integer range it relies on.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `position` is the 0-based character offset of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " (at position " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The automaton predictor refuses a bad-state set that is not strongly accessible.
class RefusalError : public Error {
 public:
  using Error::Error;
};

}  // namespace frogpred
