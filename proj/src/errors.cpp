#include "errors.hpp"

namespace adaptsurv {

const char* err_code_string(Err e) {
  switch (e) {
    case Err::parse: return "E_PARSE";
    case Err::validation: return "E_VALIDATION";
    case Err::io: return "E_IO";
    case Err::schedule_exceeds_horizon: return "E_SCHEDULE_EXCEEDS_HORIZON";
    case Err::allocation_history: return "E_ALLOCATION_HISTORY";
    case Err::empty_risk_set: return "E_EMPTY_RISK_SET";
    case Err::information_not_reached: return "E_INFORMATION_NOT_REACHED";
    case Err::no_events: return "E_NO_EVENTS";
    case Err::singular_information: return "E_SINGULAR_INFORMATION";
    case Err::not_converged: return "E_NOT_CONVERGED";
    case Err::minimum_information: return "E_MINIMUM_INFORMATION";
    case Err::quadrature: return "E_QUADRATURE";
    case Err::insufficient_replicates: return "E_INSUFFICIENT_REPLICATES";
    case Err::dimension: return "E_DIMENSION";
    case Err::usage: return "E_USAGE";
    case Err::internal: return "E_INTERNAL";
  }
  return "E_INTERNAL";
}

}  // namespace adaptsurv
