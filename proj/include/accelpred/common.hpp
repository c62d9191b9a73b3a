#pragma once

#include <stdexcept>
#include <string>

namespace acp {

// Input violates a documented precondition.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Zero-length bracket, coincident samples and similar geometric degeneracies.
class DegenerateGeometryError : public ValidationError {
 public:
  explicit DegenerateGeometryError(const std::string& msg) : ValidationError(msg) {}
};

// A numeric kernel produced NaN/Inf; the message names the producing operation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace acp
