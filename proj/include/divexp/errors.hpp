#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace divexp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range leaning, bad id, malformed assignment.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Memory budget exceeded, enumeration too large.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Raised when every node and item shares one leaning, so no assignment can
// have positive score and the sample-size lower bound is zero.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

}  // namespace divexp
