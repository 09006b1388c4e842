#pragma once

#include <stdexcept>
#include <string>

namespace wfim {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration / validation problems (bad dimensions, bad fields).
struct ConfigError : Error {
  using Error::Error;
};

struct DimensionError : ConfigError {
  using ConfigError::ConfigError;
};

struct ConstraintError : ConfigError {
  using ConfigError::ConfigError;
};

// Numerical problems (instability, degeneracy, conditioning).
struct NumericalError : Error {
  using Error::Error;
};

struct StabilityError : NumericalError {
  using NumericalError::NumericalError;
};

struct DegenerateError : NumericalError {
  using NumericalError::NumericalError;
};

struct ConditioningError : NumericalError {
  using NumericalError::NumericalError;
};

struct BudgetError : Error {
  using Error::Error;
};

}  // namespace wfim
