#pragma once

#include <stdexcept>
#include <string>

namespace behavbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An action or parameter outside its permitted range.
class RangeError : public Error {
public:
  using Error::Error;
};

/// A caller broke an operation's precondition (wrong partner, wrong game, ...).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, distributions, configs).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A human baseline distribution needed by an analysis is absent.
class MissingBaselineError : public Error {
public:
  using Error::Error;
};

/// Transport-level failure talking to a chat endpoint.
class NetworkError : public Error {
public:
  using Error::Error;
};

/// The endpoint rejected our credentials (HTTP 401/403).
class AuthError : public NetworkError {
public:
  using NetworkError::NetworkError;
};

/// Configuration problem, e.g. an unset API key variable.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numerical failure inside an estimator.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace behavbench
