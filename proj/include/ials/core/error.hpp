#pragma once

#include <stdexcept>
#include <string>

namespace ials {

// Base of every exception thrown by the library. Subclasses map onto the
// CLI exit codes (usage / check / artifact errors).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong simulator/trainer state (step after done,
// missing influence, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// History has zero probability under the model.
class ZeroLikelihoodError : public Error {
 public:
  using Error::Error;
};

}  // namespace ials
