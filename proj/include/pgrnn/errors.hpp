#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgrnn {

// Numeric inputs that violate a precondition (non-finite values, mismatched
// shapes, impossible counts).
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An integration or rollout produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time, std::size_t step)
      : std::runtime_error(what), time_(time), step_(step) {}
  double time() const noexcept { return time_; }
  std::size_t step() const noexcept { return step_; }

 private:
  double time_;
  std::size_t step_;
};

// Configuration problems: missing fields, unparseable files, bad values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset or checkpoint files that fail schema checks.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pgrnn
