#pragma once

#include <stdexcept>
#include <string>

namespace trajadapt {

// Malformed input file (bad JSON, wrong field types, missing keys).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input that violates a semantic requirement
// (e.g. lower limit >= upper limit, tracked index out of range).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Vector/matrix size disagreement between arguments.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Linear solve failed even after damping escalation.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate(condition_estimate) {}
  double condition_estimate;
};

// Non-finite value encountered mid-computation (e.g. gimbal lock inside
// an orientation derivative).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace trajadapt
