#pragma once

#include <stdexcept>
#include <string>

namespace hierlab {

/// Bad argument to an operation (shape mismatch, out-of-range value, NaN).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation called in a state where it is not allowed (e.g. step after done).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hierlab
