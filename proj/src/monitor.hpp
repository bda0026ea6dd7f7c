#pragma once

#include <cstdint>
#include <vector>

#include "trial.hpp"

namespace adaptsurv {

enum class Spending { obrien_fleming_type, pocock_type, linear };
enum class Sidedness { one, two };

struct MonitoringPlan {
  std::vector<double> v_grid;  // planned fractions, 0 < v_1 < ... <= 1
  double alpha = 0.05;
  Spending spending = Spending::obrien_fleming_type;
  Sidedness sidedness = Sidedness::two;
  double planned_information = 0.0;  // V_n
  double null_beta = 0.0;
  std::vector<double> boundaries;  // critical values on the z scale (computed)

  void validate() const;
};

// Cumulative alpha spent by fraction v for a single spending function at
// level alpha: non-decreasing, 0 at v = 0 and exactly alpha at v = 1.
double spending_value(Spending spending, double alpha, double v);

// Total (both tails) cumulative spending for the plan's sidedness. Two-sided
// plans spend alpha/2 per symmetric tail.
double total_spending(const MonitoringPlan& plan, double v);

struct BoundaryGridSpec {
  int nodes = 4001;      // Simpson nodes per look (odd)
  double span_sd = 8.0;  // grid support in standard deviations
  bool self_check = true;  // recompute at doubled resolution and compare
};

// Critical values c_k (z scale) such that the first-passage probability at
// look k under the Brownian null equals the spending increment. Numerical
// convolution of the continuation sub-density on a Simpson grid.
std::vector<double> compute_boundaries(const MonitoringPlan& plan,
                                       const BoundaryGridSpec& grid = {});

enum class LookAction { continue_, reject, accept_fail_to_reach };

struct MonitoringDecision {
  int look_index = 0;  // 1-based
  double v = 0.0;      // attained fraction (planned fraction when unreached)
  double z_statistic = 0.0;
  double boundary = 0.0;
  LookAction action = LookAction::continue_;
};

struct MonitorResult {
  std::vector<MonitoringDecision> decisions;
  std::vector<double> sigma_hat;   // per attained look
  int last_event_index_used = -1;  // index into the event sequence, -1 if none
  bool rejected = false;
  int rejected_look = 0;  // 1-based, 0 when no rejection
};

// Sequential monitoring of the rescaled score at the null. Information is
// scanned event by event, so nothing past the stopping look's sigma-hat is
// ever evaluated. Boundaries are recomputed at the attained fractions.
MonitorResult monitor_trial(const TrialData& data, const MonitoringPlan& plan, double null_beta);

}  // namespace adaptsurv
