#pragma once

#include <stdexcept>
#include <string>

namespace marvel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (bad label, negative weight, bad rate).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation called against ledger state that does not support it.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A write would break a ledger invariant (e.g. resurrecting a removed instance).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Too few values to compute margin statistics.
class DegenerateStatsError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace marvel
