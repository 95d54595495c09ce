#pragma once

#include <stdexcept>
#include <string>

namespace amrdmd {

enum class ErrorKind {
  invalid_argument,
  invalid_plan,
  not_found,
  assembly,
  solver,
  coverage,
  numeric,
  fit,
  step,
  undefined_region,
  parse,
  io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Iterative solver failure; carries the last relative residual reached.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, double residual)
      : Error(ErrorKind::solver, message), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::invalid_argument, message);
}

}  // namespace amrdmd
