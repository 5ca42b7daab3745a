#pragma once

#include <stdexcept>
#include <string>

namespace coarse {

// Malformed input or failed structural validation (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A named inequality required by an operation does not hold (exit code 2).
class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(std::string inequality, const std::string& detail)
      : std::runtime_error(inequality + ": " + detail), inequality_(std::move(inequality)) {}
  const std::string& inequality() const noexcept { return inequality_; }

 private:
  std::string inequality_;
};

// Argument outside the domain of a numerical function (exit code 2).
class DomainError : public PreconditionError {
 public:
  DomainError(std::string inequality, const std::string& detail)
      : PreconditionError(std::move(inequality), detail) {}
};

// Operation not available for this group (for example non-diagonal action).
class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root finding or other iteration failed to converge (exit code 3).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coarse
