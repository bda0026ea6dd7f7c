#pragma once

#include <string>
#include <vector>

#include "rng.hpp"
#include "trial.hpp"

namespace adaptsurv {

// Outcome of an already-completed subject, as visible to an allocation.
struct CompletedOutcome {
  int subject = -1;           // index in entry order
  double completion_time = 0.0;  // U + observed time
  double observed_time = 0.0;
  int event_indicator = 0;
  int arm = 0;
};

struct AllocationLogEntry {
  double entry_time = 0.0;
  std::string state;                    // policy state snapshot before the draw
  int arm = 0;
  double uniform_draw = 0.0;            // NaN when no draw was consumed
  std::vector<int> referenced_subjects;  // outcomes the policy consumed
};

struct SimOutcome {
  TrialData trial;
  std::vector<AllocationLogEntry> allocation_log;
};

// Stateful allocation rule. The caller hands over the full list of outcomes
// completed no later than the entry time (sorted by completion time); any
// entry completing strictly after the entry time is rejected. Only outcomes
// completed strictly before the entry time feed the policy state.
class AllocationPolicy {
 public:
  explicit AllocationPolicy(PolicySpec spec);

  // own_future is only consulted by the peek_future negative control; it
  // carries the subject's own latent exponential draw.
  int allocate(double entry_time, const std::vector<CompletedOutcome>& history, Rng& rng,
               AllocationLogEntry& log, const double* own_future = nullptr);

  std::string state_string() const;

 private:
  bool is_success(const CompletedOutcome& o) const;

  PolicySpec spec_;
  long long urn_[2] = {0, 0};
  int next_alternation_ = 0;
  size_t consumed_ = 0;  // prefix of history already folded into the urn
};

// Exactly n strictly increasing calendar entry times in [0, horizon).
// Poisson mode draws exponential gaps from per-subject streams.
std::vector<double> generate_entry_times(const EntryProcess& entry, int n, double horizon,
                                         uint64_t trial_seed);

// Event time solving: integral over [0, T] of exp(beta' Z(s)) lambda0(s) ds
// equals exp_draw, handled exactly segment by segment.
double invert_event_time(const HazardSpec& hazard, const std::vector<double>& beta,
                         const CovariatePath& path, double exp_draw);
double sample_event_time(const HazardSpec& hazard, const std::vector<double>& beta,
                         const CovariatePath& path, Rng& rng);

SimOutcome simulate_trial(const DesignConfig& config);
SimOutcome simulate_trial(const DesignConfig& config, uint64_t seed);

// Returns the indices of allocation log entries that referenced an outcome
// completed at or after the subject's own entry time (empty when the
// allocation history contract holds).
std::vector<int> audit_allocation_history(const SimOutcome& outcome);

}  // namespace adaptsurv
