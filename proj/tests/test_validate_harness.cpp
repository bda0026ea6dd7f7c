#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "helpers.hpp"
#include "info_time.hpp"
#include "mple.hpp"
#include "sim.hpp"
#include "stats.hpp"
#include "validate.hpp"

using namespace adaptsurv;
using testutil::subj;

namespace {

DesignConfig harness_config(int n) {
  DesignConfig cfg;
  cfg.target_enrollment = n;
  cfg.entry_process.kind = EntryKind::poisson;
  cfg.entry_process.rate = n / 6.0;
  cfg.allocation_policy.kind = PolicyKind::randomized_play_the_winner;
  cfg.allocation_policy.response_window = 1.0;
  cfg.hazard.cut_points = {0.0};
  cfg.hazard.rates = {1.0};
  cfg.hazard.censor_rate = 0.1;
  cfg.hazard.admin_horizon = 14.0;
  cfg.beta0 = {0.3};
  cfg.planned_information = n * 0.1;
  cfg.seed = 505;
  return cfg;
}

}  // namespace

TEST_CASE("run_replicates: determinism, failure isolation, preconditions") {
  const DesignConfig cfg = harness_config(60);
  ValidationGrids grids;
  grids.v_grid = {0.5, 1.0};
  grids.t_grid = {5.0, 8.0};
  grids.theta_grid = {3.0, 5.0};
  const ReplicateSet a = run_replicates(cfg, 8, grids, 2);
  const ReplicateSet b = run_replicates(cfg, 8, grids, 1);
  REQUIRE(a.per_replicate.size() == 8);
  for (int r = 0; r < 8; ++r) {
    CHECK(a.per_replicate[r].seed == b.per_replicate[r].seed);
    CHECK(a.per_replicate[r].bhat == b.per_replicate[r].bhat);
    CHECK(a.per_replicate[r].field == b.per_replicate[r].field);
  }
  CHECK_THROWS_WITH_AS(run_replicates(cfg, 1, grids, 1),
                       doctest::Contains("E_INSUFFICIENT_REPLICATES"), Error);
}

TEST_CASE("brownian diagnostics refuse small replicate counts") {
  const DesignConfig cfg = harness_config(40);
  ValidationGrids grids;
  grids.v_grid = {0.5};
  const ReplicateSet set = run_replicates(cfg, 20, grids, 2);
  DiagnosticsReport report;
  CHECK_THROWS_WITH_AS(brownian_diagnostics(set, report),
                       doctest::Contains("E_INSUFFICIENT_REPLICATES"), Error);
}

TEST_CASE("field diagnostics: identity pairs are exactly zero") {
  const DesignConfig cfg = harness_config(50);
  ValidationGrids grids;
  grids.t_grid = {5.0, 8.0};
  grids.theta_grid = {3.0, 5.0};
  const ReplicateSet set = run_replicates(cfg, 600, grids, 0);
  DiagnosticsReport report;
  field_diagnostics(set, report);
  // Pairs are emitted p <= q; identity pairs carry SE 0 and error 0.
  bool saw_identity = false;
  for (size_t i = 0; i < report.minmatch_errors.size(); ++i) {
    if (report.minmatch_ses[i] == 0.0) {
      CHECK(report.minmatch_errors[i] == 0.0);
      saw_identity = true;
    }
  }
  CHECK(saw_identity);
  CHECK(report.minmatch_worst_se_ratio < 6.0);  // loose smoke bound at R=600
}

TEST_CASE("observed information and the information estimator agree on average") {
  const DesignConfig cfg = harness_config(100);
  ValidationGrids grids;  // end-of-trial gap is always recorded
  const ReplicateSet set = run_replicates(cfg, 600, grids, 0);
  std::vector<double> gaps;
  for (const auto& rec : set.per_replicate)
    if (!rec.failed) gaps.push_back(rec.info_minus_vhat_over_n);
  REQUIRE(gaps.size() >= 590);
  const double tol = 4.0 * se_mean(gaps) + 2.0 / cfg.target_enrollment;
  CHECK(std::fabs(mean(gaps)) < tol);
}

TEST_CASE("estimation refuses when information per subject is below the floor") {
  const DesignConfig cfg = harness_config(80);
  const SimOutcome out = simulate_trial(cfg);
  MpleOptions opt;
  opt.min_information_floor = 10.0;  // far above anything a real trial attains
  CHECK_THROWS_WITH_AS(solve_mple(out.trial, out.trial.horizon, out.trial.horizon, {0.0}, opt),
                       doctest::Contains("E_MINIMUM_INFORMATION"), Error);
}

TEST_CASE("a nearly flat likelihood is classified as a boundary estimate") {
  // Nearly constant covariate: the score carries almost no information, so
  // the estimate runs off to a huge magnitude and gets the divergence flag.
  std::vector<Subject> s;
  for (int i = 0; i < 40; ++i)
    s.push_back(subj(0.1 * (i + 1), i % 2 == 0 ? 0.0 : 0.01, 1.0 + 0.05 * i, 100.0, i % 2));
  const TrialData trial = TrialData::build(std::move(s), 100.0);
  const MpleResult res = solve_mple(trial, 50.0, 50.0, {0.0});
  CHECK(res.diverged);
  CHECK_FALSE(res.converged);
  CHECK(std::isnan(res.covariance[0]));
}

TEST_CASE("bhat path on a zero-event trial is empty") {
  std::vector<Subject> s;
  s.push_back(subj(0.5, 1.0, 900.0, 2.0));
  s.push_back(subj(1.5, 0.0, 900.0, 2.0));
  const TrialData trial = TrialData::build(std::move(s), 1000.0);
  const RescaledPath path = bhat_path(trial, 0.0, {0.25, 0.5, 1.0}, 5.0);
  for (size_t j = 0; j < path.v_grid.size(); ++j) {
    CHECK_FALSE(path.reached[j]);
    CHECK(std::isnan(path.bhat[j]));
  }
}
