#pragma once

#include <stdexcept>
#include <string>

namespace catsoft {

// Bad configuration value (out-of-range parameter, unknown key, ...).
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Dimension/shape disagreement between containers that must match.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite values or other numeric breakdown at runtime.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse that a correct caller can never trigger.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace catsoft
