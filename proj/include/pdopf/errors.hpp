#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdopf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  enum class Kind {
    MissingSection,
    MalformedRow,
    NoSlackBus,
    DuplicateSlack,
    UnsupportedCostModel,
    InvalidNetwork,
  };

  ParseError(Kind kind, std::string message, std::size_t line = 0)
      : Error(std::move(message)), kind_(kind), line_(line) {}

  Kind kind() const noexcept { return kind_; }
  // 1-based source line, 0 when not tied to a row.
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

class ReferenceCostError : public Error {
 public:
  enum class Kind { DispatchCountMismatch, DispatchOutOfBounds, MalformedFile };

  ReferenceCostError(Kind kind, std::string message)
      : Error(std::move(message)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class PrivacyError : public Error {
 public:
  enum class Kind { DomainError, InputOutOfRange, InvalidParams, MissingRanges };

  PrivacyError(Kind kind, std::string message)
      : Error(std::move(message)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Raised by a generator agent whose cost band does not intersect its bounds.
class InfeasibleCostBand : public Error {
 public:
  InfeasibleCostBand(std::size_t generator, std::string message)
      : Error(std::move(message)), generator_(generator) {}
  std::size_t generator() const noexcept { return generator_; }

 private:
  std::size_t generator_;
};

// Raised when the line subproblem solver exhausts its iteration budget.
class LineSolveFailed : public Error {
 public:
  LineSolveFailed(std::size_t line, std::string message)
      : Error(std::move(message)), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  enum class Kind { DimensionMismatch, ZeroReferenceCost, MissingReferenceCost };

  ValidationError(Kind kind, std::string message)
      : Error(std::move(message)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdopf
