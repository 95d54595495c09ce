#include "amrdmd/error.hpp"

namespace amrdmd {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_plan: return "invalid-plan";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::assembly: return "assembly-error";
    case ErrorKind::solver: return "solver-error";
    case ErrorKind::coverage: return "coverage-error";
    case ErrorKind::numeric: return "numeric-error";
    case ErrorKind::fit: return "fit-error";
    case ErrorKind::step: return "step-error";
    case ErrorKind::undefined_region: return "undefined-region";
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::io: return "io-error";
  }
  return "unknown";
}

}  // namespace amrdmd
