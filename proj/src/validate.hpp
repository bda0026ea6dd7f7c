#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cox.hpp"
#include "monitor.hpp"
#include "rng.hpp"
#include "trial.hpp"

namespace adaptsurv {

// Reference score implementation: direct double loop over events and
// subjects with no sorting, caching or shared machinery. Deliberately kept
// structurally independent of CoxEval so the two can check each other.
std::vector<double> oracle_score(const TrialData& data, const std::vector<double>& beta, double t,
                                 double theta, ScoreVariant variant);

// Event-sum term minus the compensator term computed from the known baseline
// hazard, integrated exactly over the breakpoints where the risk-set average
// or any covariate segment changes (full risk-set convention). A martingale
// in theta at beta = beta0; identical to the plain score when theta == t.
std::vector<double> compensated_score(const TrialData& data, const std::vector<double>& beta,
                                      double t, double theta, const HazardSpec& lambda0);

// Random small trials for oracle sweeps: staggered entries, mixed constant
// and step covariate paths, exponential events and censoring.
TrialData random_small_trial(Rng& rng, int max_n, int dim, bool step_paths);

// Max sup-norm disagreement between score() and oracle_score() over random
// trials, betas, (t, theta) queries and both variants.
double oracle_equivalence_sweep(uint64_t seed, int trials, int max_n);

struct ValidationGrids {
  std::vector<double> v_grid;                   // rescaled-score diagnostics
  std::vector<double> t_grid, theta_grid;       // two-parameter field grid
  std::vector<double> est_v_grid;               // beta-hat at fractions
  bool with_estimation = false;                 // end-of-trial MPLE + coverage
  bool with_monitoring = false;
  MonitoringPlan plan;
};

struct ReplicateRecord {
  uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::vector<double> bhat;            // per v, NaN when unreached
  std::vector<uint8_t> bhat_reached;
  std::vector<double> field;           // grid points * d, compensated score / sqrt(n)
  double beta_end = 0.0;
  bool beta_end_converged = false;
  bool ci_covers = false;
  std::vector<double> beta_at_v;       // per est_v, NaN when unreached
  std::vector<uint8_t> beta_at_v_ok;
  int rejected_look = 0;               // 0 = no rejection
  int looks_attained = 0;
  double info_minus_vhat_over_n = 0.0;  // end-of-trial (I - Vhat)/n at beta0
};

struct ReplicateSet {
  DesignConfig config;
  ValidationGrids grids;
  int R = 0;
  std::vector<ReplicateRecord> per_replicate;
};

// R independent trials from split seed streams; statistics evaluated at
// beta = beta0. Per-replicate domain failures are recorded, not fatal.
ReplicateSet run_replicates(const DesignConfig& config, int R, const ValidationGrids& grids,
                            int threads);

struct DiagnosticsReport {
  // Rescaled-score diagnostics, one entry per v.
  std::vector<double> v_grid;
  std::vector<double> bhat_means, bhat_mean_ses;
  std::vector<double> bhat_vars, bhat_var_ses;
  std::vector<double> ks_statistics;  // of B(v)/sqrt(v) against N(0,1)
  std::vector<double> attain_rates;
  // Covariances between disjoint increments (consecutive pairs).
  std::vector<double> increment_covariances, increment_cov_ses;

  // Two-parameter field diagnostics.
  std::vector<double> field_t, field_theta;     // grid points actually used
  std::vector<double> field_means, field_mean_ses;
  std::vector<double> field_covariance_matrix;  // (P*d) x (P*d), row-major
  std::vector<double> minmatch_errors;          // |C(p,q) - C(min,min)| per pair/component
  std::vector<double> minmatch_ses;             // jackknife SEs, aligned
  double minmatch_max_discrepancy = 0.0;
  double minmatch_worst_se_ratio = 0.0;         // max |err| / SE

  double type1_rate = -1.0;
  double coverage_rate = -1.0;
  double oracle_max_error = -1.0;
  double info_vhat_mean_gap = 0.0;
  int failed_replicates = 0;
  int replicates = 0;
};

// Means / variances / increment covariances / KS statistics of the rescaled
// score paths. Requires R >= 500 usable replicates.
void brownian_diagnostics(const ReplicateSet& set, DiagnosticsReport& report);

// Empirical covariance of the two-parameter compensated score across the
// grid, and the discrepancy against the variance at the pairwise-minimum
// point, with delete-one jackknife standard errors.
void field_diagnostics(const ReplicateSet& set, DiagnosticsReport& report);

// Sequential rejection rate under the null config and CI coverage under the
// alternative config.
struct OperatingRates {
  double type1_rate = -1.0;
  double coverage_rate = -1.0;
  int type1_failed = 0, coverage_failed = 0;
};
OperatingRates type1_and_coverage(const DesignConfig& null_config, const MonitoringPlan& plan,
                                  const DesignConfig& alt_config, int R, int threads);

}  // namespace adaptsurv
