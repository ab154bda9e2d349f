#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sustain {

// Error carrying a stable machine-readable code. The CLI maps codes to exit
// statuses and to the JSON error report written on stderr.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Bad configuration or bad input data. Exit status 1.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& message,
                       std::string code = "config_error")
      : Error(std::move(code), message) {}
};

// Domain violation while evaluating model primitives (negative stock,
// nonpositive price, failed inversion, corner point, ...).
class ModelError : public Error {
public:
  explicit ModelError(const std::string& message,
                      std::string code = "model_error")
      : Error(std::move(code), message) {}
};

// Failure inside the shooting / fixed-point / stepping machinery.
// Exit status 2. Codes include "bracket_failure", "max_iterations",
// "fixed_point_divergence", "stock_infeasible", "price_out_of_range_low",
// "price_out_of_range_high", "recovery_failure".
class SolverError : public Error {
public:
  SolverError(std::string code, const std::string& message)
      : Error(std::move(code), message) {}
};

}  // namespace sustain
