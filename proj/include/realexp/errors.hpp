#pragma once

#include <stdexcept>
#include <string>

namespace realexp {

// Error hierarchy mapped to CLI exit codes:
//   ValidationError (and subclasses) -> 2
//   TransportError  (and subclasses) -> 3
//   EvaluationError                  -> 4
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Input exceeds a hard computational cap (e.g. 2^n value evaluations).
class CapacityError : public ValidationError {
 public:
  explicit CapacityError(const std::string& msg) : ValidationError(msg) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& msg) : Error(msg) {}
};

// Endpoint responded, but not with the line protocol we speak.
class ProtocolError : public TransportError {
 public:
  explicit ProtocolError(const std::string& msg) : TransportError(msg) {}
};

// A value function or model produced a non-finite or unusable result.
class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& msg) : Error(msg) {}
};

inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const TransportError*>(&e)) return 3;
  if (dynamic_cast<const EvaluationError*>(&e)) return 4;
  return 1;
}

}  // namespace realexp
