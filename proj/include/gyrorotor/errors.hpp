#pragma once

#include <stdexcept>
#include <string>

namespace gyrorotor {

// Thrown when a caller violates an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Frequency extraction could not find a usable oscillation in the data.
class EstimationFailed : public std::runtime_error {
 public:
  EstimationFailed(const std::string& what, std::string diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// Malformed or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gyrorotor
