#pragma once

#include <stdexcept>
#include <string>

namespace koopman {

/// A point, label or input does not belong to the domain it was used on.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when an operator is applied to an observable living on the wrong
/// domain; composing the naive operator with itself ends up here.
class DomainMismatch : public ContractError {
 public:
  using ContractError::ContractError;
};

/// The operation needs an enumerable domain and was given a continuum.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or sample plan.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace koopman
