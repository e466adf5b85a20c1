#pragma once

#include <stdexcept>

namespace complat {

// Thrown for invalid configuration or impossible parameter combinations.
// CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for malformed inputs, format violations, and missing or
// inconsistent artifacts. CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when training or evaluation produces non-finite values.
// CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace complat
