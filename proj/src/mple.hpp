#pragma once

#include <array>
#include <vector>

#include "cox.hpp"
#include "trial.hpp"

namespace adaptsurv {

struct MpleOptions {
  double tol = 1e-10;          // sup-norm of the score at convergence
  int max_iter = 60;
  int max_halvings = 30;
  double divergence_bound = 50.0;   // |beta| beyond this is treated as monotone likelihood
  double min_information_floor = 1e-3;  // floor on min eigenvalue of information / n
  double max_condition = 1e12;
};

struct MpleResult {
  std::vector<double> beta_hat;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;  // ran against the divergence bound (boundary estimate)
  double final_score_norm = 0.0;
  double loglik = 0.0;
  std::vector<double> information_at_hat;   // d x d
  std::vector<double> vhat_at_hat;          // d x d
  std::vector<double> covariance;           // d x d, of sqrt(n) (beta_hat - beta0)
  std::vector<double> covariance_sandwich;  // I^-1 Vhat I^-1, same scaling
  std::vector<std::array<double, 2>> ci_95;
  int n_events = 0;
};

// Newton iteration with step-halving on the log partial likelihood, using the
// entry-restricted risk-set variant so the statistic is observable for
// theta < t.
MpleResult solve_mple(const TrialData& data, double t, double theta,
                      const std::vector<double>& init, const MpleOptions& opt = {});

// beta-hat at information fraction v: the stopping time is evaluated at a
// frozen reference beta (the monitoring null by default) and the score is
// then solved at t = theta = sigma-hat.
MpleResult solve_mple_at_fraction(const TrialData& data, double v, double planned,
                                  double ref_beta = 0.0, double init = 0.0,
                                  const MpleOptions& opt = {});

}  // namespace adaptsurv
