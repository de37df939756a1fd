#pragma once

#include <stdexcept>
#include <string>

namespace dpg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible sizes between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Failed factorization, singular system, rank deficiency.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A stated hypothesis on the input does not hold (idempotence, Fortin orthogonality, data regularity).
class AssumptionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpg
