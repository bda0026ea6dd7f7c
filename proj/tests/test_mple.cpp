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

DesignConfig two_arm_config(int n, double beta0) {
  DesignConfig cfg;
  cfg.target_enrollment = n;
  cfg.entry_process.kind = EntryKind::poisson;
  cfg.entry_process.rate = n / 8.0;
  cfg.allocation_policy.kind = PolicyKind::complete_randomization;
  cfg.allocation_policy.p = 0.5;
  cfg.hazard.cut_points = {0.0};
  cfg.hazard.rates = {1.0};
  cfg.hazard.censor_rate = 0.1;
  cfg.hazard.admin_horizon = 25.0;
  cfg.beta0 = {beta0};
  cfg.planned_information = n * 0.2;
  cfg.seed = 4242;
  return cfg;
}

}  // namespace

TEST_CASE("no usable events raises NoEvents") {
  std::vector<Subject> s;
  s.push_back(subj(0.5, 1.0, 900.0, 2.0));
  s.push_back(subj(1.0, 0.0, 900.0, 2.5));
  const TrialData trial = TrialData::build(std::move(s), 1000.0);
  CHECK_THROWS_WITH_AS(solve_mple(trial, 100.0, 100.0, {0.0}),
                       doctest::Contains("E_NO_EVENTS"), Error);
}

TEST_CASE("single subject with a single event is singular") {
  std::vector<Subject> s;
  s.push_back(subj(0.5, 1.0, 2.0, 900.0));
  const TrialData trial = TrialData::build(std::move(s), 1000.0);
  CHECK_THROWS_WITH_AS(solve_mple(trial, 100.0, 100.0, {0.0}),
                       doctest::Contains("E_SINGULAR_INFORMATION"), Error);
}

TEST_CASE("monotone likelihood runs against the divergence bound") {
  // All events in arm 1 while arm 0 stays at risk: the likelihood increases
  // without bound in beta.
  std::vector<Subject> s;
  s.push_back(subj(0.1, 1.0, 1.0, 900.0, 1));
  s.push_back(subj(0.2, 1.0, 2.0, 900.0, 1));
  s.push_back(subj(0.3, 1.0, 3.0, 900.0, 1));
  s.push_back(subj(0.4, 0.0, 900.0, 50.0, 0));
  s.push_back(subj(0.5, 0.0, 900.0, 50.0, 0));
  const TrialData trial = TrialData::build(std::move(s), 1000.0);
  const MpleResult res = solve_mple(trial, 100.0, 100.0, {0.0});
  CHECK(res.diverged);
  CHECK_FALSE(res.converged);
  CHECK(std::fabs(res.beta_hat[0]) > 10.0);
}

TEST_CASE("newton converges to the same root from different starts") {
  const SimOutcome out = simulate_trial(two_arm_config(300, 0.5));
  const double t = out.trial.horizon;
  const MpleResult a = solve_mple(out.trial, t, t, {0.0});
  const MpleResult b = solve_mple(out.trial, t, t, {0.5});
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(std::fabs(a.beta_hat[0] - b.beta_hat[0]) < 1e-9);
  CHECK(a.final_score_norm < 1e-10);
  // Ascent property relative to the start.
  const ScoreEvaluation at_init = score(out.trial, {0.0}, t, t, ScoreVariant::subsample_riskset);
  CHECK(a.loglik >= at_init.loglik);
}

TEST_CASE("arm relabeling flips the estimate") {
  const SimOutcome out = simulate_trial(two_arm_config(200, 0.4));
  std::vector<Subject> flipped;
  for (const Subject& s : out.trial.subjects) {
    CovariatePath p = s.covariates;
    p.values[0] = 1.0 - p.values[0];
    flipped.push_back(Subject::make(s.entry_time, std::move(p), s.latent_event, s.latent_censor,
                                    1 - s.arm));
  }
  const TrialData mirrored = TrialData::build(std::move(flipped), out.trial.horizon);
  const double t = out.trial.horizon;
  const MpleResult a = solve_mple(out.trial, t, t, {0.0});
  const MpleResult b = solve_mple(mirrored, t, t, {0.0});
  CHECK(std::fabs(a.beta_hat[0] + b.beta_hat[0]) < 1e-8);
}

TEST_CASE("reported score norm holds at the estimate") {
  const SimOutcome out = simulate_trial(two_arm_config(150, 0.0));
  const double t = out.trial.horizon;
  const MpleResult res = solve_mple(out.trial, t, t, {0.2});
  REQUIRE(res.converged);
  const ScoreEvaluation ev =
      score(out.trial, res.beta_hat, t, t, ScoreVariant::subsample_riskset);
  CHECK(std::fabs(ev.score[0]) == doctest::Approx(res.final_score_norm).epsilon(1e-9));
  CHECK(std::fabs(ev.score[0]) < 1e-10);
}

TEST_CASE("fraction pathway agrees with the direct solve at the last event") {
  const SimOutcome out = simulate_trial(two_arm_config(120, 0.3));
  const TrialData& trial = out.trial;
  const double planned = 6.0;
  const InformationPath info = information_path(trial, 0.3, planned);
  REQUIRE_FALSE(info.event_times.empty());
  const double vbar = info.vhat_at_events.back() / planned;
  REQUIRE(vbar > 0.2);
  const double v = vbar * 0.999;  // just below the final information level
  const MpleResult frac = solve_mple_at_fraction(trial, v, planned, 0.3);
  const double sig = sigma_hat(info, v);
  const MpleResult direct = solve_mple(trial, sig, sig, {0.0});
  CHECK(frac.beta_hat[0] == doctest::Approx(direct.beta_hat[0]).epsilon(1e-12));
}

TEST_CASE("fraction pathway propagates unreached information") {
  const SimOutcome out = simulate_trial(two_arm_config(60, 0.0));
  CHECK_THROWS_WITH_AS(solve_mple_at_fraction(out.trial, 1.0, 1e6, 0.0),
                       doctest::Contains("E_INFORMATION_NOT_REACHED"), Error);
}

TEST_CASE("two-arm null: estimate near zero with covering CI, small run") {
  DesignConfig cfg = two_arm_config(400, 0.0);
  int covered = 0, used = 0;
  const int R = 120;
  for (int r = 0; r < R; ++r) {
    const SimOutcome out = simulate_trial(cfg, derive_seed(cfg.seed, StreamDomain::replicate, r));
    const MpleResult res = solve_mple(out.trial, out.trial.horizon, out.trial.horizon, {0.0});
    if (!res.converged) continue;
    ++used;
    CHECK(std::fabs(res.beta_hat[0]) < 0.5);
    if (res.ci_95[0][0] <= 0.0 && 0.0 <= res.ci_95[0][1]) ++covered;
  }
  REQUIRE(used >= R - 2);
  const double rate = static_cast<double>(covered) / used;
  CHECK(rate > 0.88);
  CHECK(rate <= 1.0);
}

TEST_CASE("multidimensional estimation recovers both coefficients roughly") {
  DesignConfig cfg = two_arm_config(500, 0.6);
  cfg.beta0 = {0.6, -0.4};
  const SimOutcome out = simulate_trial(cfg);
  const MpleResult res =
      solve_mple(out.trial, out.trial.horizon, out.trial.horizon, {0.0, 0.0});
  REQUIRE(res.converged);
  CHECK(std::fabs(res.beta_hat[0] - 0.6) < 0.35);
  CHECK(std::fabs(res.beta_hat[1] + 0.4) < 0.35);
  // Sandwich and plain covariance are both symmetric PSD.
  CHECK(res.covariance[1] == doctest::Approx(res.covariance[2]));
  CHECK(res.covariance[0] > 0.0);
  CHECK(res.covariance_sandwich[0] > 0.0);
}
