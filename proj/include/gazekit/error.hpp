#pragma once

#include <stdexcept>
#include <string>

namespace gazekit {

// Bad input data: malformed files, out-of-range fields, shape mismatches
// between declared and observed structures. CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: non-finite values, diverging training, failed gradient
// verification. CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad command-line invocation. CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gazekit
