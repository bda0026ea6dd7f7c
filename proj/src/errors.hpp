#pragma once

#include <stdexcept>
#include <string>

namespace adaptsurv {

// Domain error taxonomy. Every throwing path in the library uses one of
// these codes so the C API and the CLI can report stable identifiers.
enum class Err {
  parse,
  validation,
  io,
  schedule_exceeds_horizon,
  allocation_history,  // allocation consumed an outcome completed after entry
  empty_risk_set,
  information_not_reached,
  no_events,
  singular_information,
  not_converged,
  minimum_information,
  quadrature,
  insufficient_replicates,
  dimension,
  usage,
  internal,
};

const char* err_code_string(Err e);

struct Error : std::runtime_error {
  Err code;
  Error(Err c, const std::string& msg)
      : std::runtime_error(std::string(err_code_string(c)) + ": " + msg), code(c) {}
};

[[noreturn]] inline void fail(Err c, const std::string& msg) { throw Error(c, msg); }

}  // namespace adaptsurv
