#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoequiv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed expression text. `offset` is the byte position of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation outside the set where a function is defined: arithmetic domain
// errors in expressions and chart points outside the declared domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A metric that fails symmetry or positive definiteness, or a singular operator
// built from metrics.
class MetricError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration: bad files, bad parameters, unknown catalog names.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoequiv
