#pragma once

#include <stdexcept>
#include <string>

namespace prelac {

/// Shapes of operands are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-side precondition was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values reached an operation that cannot handle them.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Topology or other structured input failed validation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run configuration is malformed or references unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prelac
