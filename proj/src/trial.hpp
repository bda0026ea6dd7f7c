#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace adaptsurv {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Right-continuous step function on time-on-study. Segment s covers
// [jump_times[s], jump_times[s+1]) and holds a d-dimensional value stored
// flat at values[s*dim .. (s+1)*dim). Constant extrapolation past the last
// jump.
struct CovariatePath {
  std::vector<double> jump_times;  // strictly increasing, first is 0
  std::vector<double> values;      // segments * dim, flat row-major
  int dim = 0;

  static CovariatePath constant(std::vector<double> z);
  static CovariatePath step(std::vector<double> jump_times, std::vector<double> flat_values,
                            int dim);

  int segments() const { return static_cast<int>(jump_times.size()); }
  bool is_constant() const { return segments() == 1; }

  int segment_index(double w) const;
  // Pointer to the dim values of the segment containing w.
  const double* at(double w) const { return values.data() + segment_index(w) * dim; }
  double at1(double w) const { return values[segment_index(w) * dim]; }

  // L1 norm of the initial value plus L1 norms of all jumps.
  double total_variation() const;
  void check_bound(double k_tau) const;
};

struct Subject {
  double entry_time = 0.0;   // calendar time U
  CovariatePath covariates;  // Z(.) on time-on-study
  double latent_event = 0.0;   // T > 0
  double latent_censor = 0.0;  // C > 0
  double observed_time = 0.0;  // min(T, C)
  int event_indicator = 0;     // 1 iff T <= C
  int arm = 0;

  double completion_time() const { return entry_time + observed_time; }

  static Subject make(double entry, CovariatePath z, double latent_event, double latent_censor,
                      int arm);
};

// 1 iff the subject is still under observation at time-on-study w.
inline int risk_indicator(const Subject& s, double w) { return s.observed_time >= w ? 1 : 0; }

// Piecewise-constant baseline hazard plus censoring description.
struct HazardSpec {
  std::vector<double> cut_points;  // increasing, first is 0
  std::vector<double> rates;       // one per segment, all > 0
  double censor_rate = 0.0;        // exponential censoring hazard, >= 0
  double admin_horizon = kInf;     // administrative censoring at calendar tau

  void validate() const;
  double rate_at(double w) const;
  double cumulative(double w) const;  // integral of the baseline hazard over [0, w]
  // Smallest w with cumulative(w) == h; requires all rates > 0.
  double inverse_cumulative(double h) const;
};

struct TrialData {
  std::vector<Subject> subjects;  // strictly increasing entry times
  double horizon = kInf;          // calendar tau
  std::vector<double> true_beta;  // simulation only; empty when unknown
  std::optional<HazardSpec> baseline_hazard;  // simulation only

  int n() const { return static_cast<int>(subjects.size()); }
  int covariate_dim() const { return subjects.empty() ? 0 : subjects.front().covariates.dim; }

  // Entry counting process: #{i : U_i <= t}.
  int entries_by(double t) const;
  bool has_tied_event_times() const;

  // Validates ordering (ties rejected), entry < horizon, uniform covariate
  // dimension and the covariate variation bound.
  static TrialData build(std::vector<Subject> subjects, double horizon,
                         std::vector<double> true_beta = {},
                         std::optional<HazardSpec> baseline_hazard = std::nullopt,
                         double covariate_bound = kInf);
};

enum class EntryKind { poisson, fixed_schedule };

struct EntryProcess {
  EntryKind kind = EntryKind::poisson;
  double rate = 1.0;                // poisson mode
  std::vector<double> times;        // fixed_schedule mode
};

enum class PolicyKind {
  complete_randomization,
  randomized_play_the_winner,
  deterministic_alternation,
  // Negative control: assigns the arm from the subject's own not yet
  // observable outcome draw. Exists so the audit and the martingale
  // diagnostics can be shown to catch history leakage.
  peek_future,
};

enum class SuccessRule { survival_past_window, event_before_window };

struct PolicySpec {
  PolicyKind kind = PolicyKind::complete_randomization;
  double p = 0.5;                  // complete randomization P(arm 1)
  int initial_balls_per_arm = 1;   // play-the-winner urn
  int balls_added = 1;
  double response_window = 1.0;
  SuccessRule success_rule = SuccessRule::survival_past_window;

  void validate() const;
};

struct DesignConfig {
  int target_enrollment = 0;  // n
  EntryProcess entry_process;
  PolicySpec allocation_policy;
  HazardSpec hazard;
  std::vector<double> beta0;        // true regression parameter, length d
  double planned_information = 0.0;  // V_n
  double v_bar = 1.0;                // maximum monitored information fraction
  double covariate_bound = 10.0;     // K_tau for path variation checks
  double arm_scale = 1.0;            // numeric coding of arm 1 in component 0
  uint64_t seed = 0;

  int dim() const { return static_cast<int>(beta0.size()); }
  void validate() const;
};

}  // namespace adaptsurv
