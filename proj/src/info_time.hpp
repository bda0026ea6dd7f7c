#pragma once

#include <cstdint>
#include <vector>

#include "trial.hpp"

namespace adaptsurv {

// Observed information V-hat_{t,t}(beta) re-evaluated at each event time.
// The risk-set average shifts with t, so values are full re-evaluations,
// not a running sum, and the path need not be monotone at finite n.
struct InformationPath {
  std::vector<double> event_times;     // increasing calendar times, one per event
  std::vector<double> vhat_at_events;  // V-hat at each event time
  double planned = 0.0;                // V_n
};

struct RescaledPath {
  std::vector<double> v_grid;
  std::vector<double> sigma_hat;  // NaN where unreached
  std::vector<double> bhat;       // NaN where unreached
  std::vector<uint8_t> reached;
  std::vector<uint8_t> dipped;    // information later dipped below v * V_n
};

InformationPath information_path(const TrialData& data, double beta, double planned);

// First event time where V-hat / V_n reaches v (first crossing, even if the
// path later dips). Throws information_not_reached when no crossing exists.
double sigma_hat(const InformationPath& path, double v);

RescaledPath bhat_path(const TrialData& data, double beta, const std::vector<double>& v_grid,
                       double planned);

}  // namespace adaptsurv
