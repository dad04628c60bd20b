#pragma once

#include <stdexcept>
#include <string>

namespace dynmarker {

// Base for every error raised by the library. Out-of-view, dropouts and
// invalid stamps are values, not errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Out-of-order or duplicate marker configuration id.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

// Scenario document problems. `field()` is the dotted path of the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace dynmarker
