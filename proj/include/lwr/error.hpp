#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lwr {

// Root of every exception thrown by the toolkit. The CLI maps the concrete
// subclasses onto its exit-code registry.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// location is a 1-based line number for text formats and a byte offset for
// binary formats.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what + " (at " + std::to_string(location) + ")"), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

class PackingError : public Error {
 public:
  using Error::Error;
};

class CoordinateError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class DegenerateFixtureError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::size_t frequency_index)
      : Error(what + " (frequency index " + std::to_string(frequency_index) + ")"),
        index_(frequency_index) {}
  std::size_t frequency_index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

class MissingRateError : public Error {
 public:
  using Error::Error;
};

}  // namespace lwr
