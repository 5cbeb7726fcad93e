#pragma once

#include <stdexcept>
#include <string>

namespace ssearch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input that contains NaN or Inf where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// The gradient window carries no usable direction (empty or all zero).
class DegenerateHistory : public Error {
 public:
  using Error::Error;
};

/// Malformed exchange with a remote surrogate, or an unreachable peer.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Objective evaluation failed; the message names the candidate.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssearch
