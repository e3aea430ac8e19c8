#pragma once
#include <stdexcept>
#include <string>

namespace pdpm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data: row values out of range, dimension mismatches, invalid patterns.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A scalar parameter outside its admissible range (ε ≤ 0, θ ≤ 0, r ∉ [0,1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// The operation is not defined for this mechanism or query type.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// No solution exists: unreachable variance, empty range, failed bracket.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A curve violated a property that an operation relies on (e.g. monotonicity).
class CheckerError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Session state machine misuse (purchase without a matching offer).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MarketExhausted : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

}  // namespace pdpm
