#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irltrack {

/// Invalid configuration or dimension mismatch. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Filesystem or stream failure. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf detected during evaluation or integration. Maps to CLI exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, long step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}

  /// Step index at which the failure was detected, -1 when not inside a run.
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace irltrack
