#pragma once

#include <stdexcept>
#include <string>

namespace snakesim {

// Invalid or inconsistent configuration (empty grid, bad quadrature order, mode mismatch).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric argument lies outside the domain where the model is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class KernelNotPsdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query beyond the data accumulated by a run (e.g. inverse local time past terminal mass).
class OutOfRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Path discretization too coarse to resolve the requested crossings.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment specification failed validation; `field()` names the offending key path.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace snakesim
