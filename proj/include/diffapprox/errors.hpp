#pragma once

#include <stdexcept>
#include <string>

namespace diffapprox {

// Invalid parameters, shapes or configuration. CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite rates/states and similar run-time numeric failures. CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diffapprox
