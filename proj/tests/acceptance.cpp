// Acceptance suite: one pass/fail line per criterion, heavier Monte Carlo
// settings than the unit tests. Exit code counts the failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adaptsurv.h"
#include "boundary_oracle.hpp"
#include "cox.hpp"
#include "info_time.hpp"
#include "monitor.hpp"
#include "mple.hpp"
#include "serialize.hpp"
#include "sim.hpp"
#include "stats.hpp"
#include "validate.hpp"

using namespace adaptsurv;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int index, const std::string& name, bool pass, const std::string& detail,
            double elapsed, double budget) {
  const bool in_budget = elapsed < budget;
  const bool ok = pass && in_budget;
  if (!ok) ++g_failures;
  std::printf("[%s] %d. %s: %s [%.1f s < %.0f s]\n", ok ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str(), elapsed, budget);
  std::fflush(stdout);
}

DesignConfig trial_config(int n, double entry_rate, double beta0, double censor_rate, double tau,
                          double planned, uint64_t seed) {
  DesignConfig cfg;
  cfg.target_enrollment = n;
  cfg.entry_process.kind = EntryKind::poisson;
  cfg.entry_process.rate = entry_rate;
  cfg.allocation_policy.kind = PolicyKind::randomized_play_the_winner;
  cfg.allocation_policy.initial_balls_per_arm = 1;
  cfg.allocation_policy.balls_added = 1;
  cfg.allocation_policy.response_window = 1.0;
  cfg.hazard.cut_points = {0.0};
  cfg.hazard.rates = {1.0};
  cfg.hazard.censor_rate = censor_rate;
  cfg.hazard.admin_horizon = tau;
  cfg.beta0 = {beta0};
  cfg.planned_information = planned;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

void criterion_1_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const double worst = oracle_equivalence_sweep(9101, 100, 50);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max |score - oracle| over 100 trials, both variants = %.2e (< 1e-12)", worst);
  report(1, "oracle equivalence", worst < 1e-12, detail, seconds_since(start), 10.0);
}

void criterion_2_gradients() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    Rng rng = Rng::stream(9102, StreamDomain::generic, r);
    const int d = 1 + r % 3;
    const TrialData trial = random_small_trial(rng, 40, d, r % 2 == 1);
    std::vector<double> beta(d);
    for (double& b : beta) b = rng.uniform(-0.8, 0.8);
    const double t = trial.horizon * rng.uniform(0.5, 1.0);
    const double theta = t * rng.uniform(0.4, 1.0);
    for (ScoreVariant variant : {ScoreVariant::full_riskset, ScoreVariant::subsample_riskset})
      worst = std::max(worst, score_gradient_check(trial, beta, t, theta, variant, 1e-5));
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max relative error of d(loglik)/d(beta) and d(score)/d(beta) = %.2e (< 1e-6)",
                worst);
  report(2, "gradient and curvature checks", worst < 1e-6, detail, seconds_since(start), 10.0);
}

struct SharedRunA {
  ReplicateSet main_set;
  DiagnosticsReport main_report;
  double elapsed = 0.0;
};

SharedRunA run_config_a() {
  const auto start = std::chrono::steady_clock::now();
  DesignConfig cfg = trial_config(200, 20.0, 0.4, 0.15, 16.0, 32.0, 811001);
  ValidationGrids grids;
  grids.v_grid = {0.25, 0.5, 0.75, 1.0};
  grids.t_grid = {6.0, 9.0, 12.0};
  grids.theta_grid = {3.0, 4.5, 6.0};
  SharedRunA out;
  out.main_set = run_replicates(cfg, 2000, grids, 0);
  brownian_diagnostics(out.main_set, out.main_report);
  field_diagnostics(out.main_set, out.main_report);
  out.elapsed = seconds_since(start);
  return out;
}

void criterion_3_martingale(const SharedRunA& shared) {
  const auto start = std::chrono::steady_clock::now();

  // Main run: every grid point within 3 SE of zero.
  double worst_ratio = 0.0;
  const DiagnosticsReport& rep = shared.main_report;
  for (size_t m = 0; m < rep.field_means.size(); ++m)
    worst_ratio = std::max(worst_ratio, std::fabs(rep.field_means[m]) / rep.field_mean_ses[m]);

  // Negative control: the policy that reads its own latent outcome must be
  // detected at some grid point.
  DesignConfig peek = trial_config(200, 20.0, 0.4, 0.15, 16.0, 32.0, 811002);
  peek.allocation_policy.kind = PolicyKind::peek_future;
  ValidationGrids grids;
  grids.t_grid = {6.0, 9.0, 12.0};
  grids.theta_grid = {3.0, 4.5, 6.0};
  const ReplicateSet neg = run_replicates(peek, 2000, grids, 0);
  DiagnosticsReport neg_report;
  field_diagnostics(neg, neg_report);
  double neg_ratio = 0.0;
  for (size_t m = 0; m < neg_report.field_means.size(); ++m)
    neg_ratio = std::max(neg_ratio, std::fabs(neg_report.field_means[m]) /
                                        neg_report.field_mean_ses[m]);

  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "3x3 grid max |mean|/SE = %.2f (<= 3); negative control max = %.1f (> 3)",
                worst_ratio, neg_ratio);
  report(3, "martingale mean with negative control", worst_ratio <= 3.0 && neg_ratio > 3.0,
         detail, shared.elapsed + seconds_since(start), 180.0);
}

void criterion_4_brownian(const SharedRunA& shared) {
  const DiagnosticsReport& rep = shared.main_report;
  const int R = rep.replicates - rep.failed_replicates;
  bool pass = true;
  std::ostringstream detail;
  double worst_mean = 0.0, worst_var = 0.0, worst_inc = 0.0;
  for (size_t j = 0; j < rep.v_grid.size(); ++j) {
    const double v = rep.v_grid[j];
    const double mean_tol = 3.0 * std::sqrt(v / R);
    worst_mean = std::max(worst_mean, std::fabs(rep.bhat_means[j]) / mean_tol);
    if (std::fabs(rep.bhat_means[j]) > mean_tol) pass = false;
    const double var_tol = 4.0 * rep.bhat_var_ses[j];
    worst_var = std::max(worst_var, std::fabs(rep.bhat_vars[j] - v) / var_tol);
    if (std::fabs(rep.bhat_vars[j] - v) > var_tol) pass = false;
    if (rep.attain_rates[j] < 0.999) pass = false;
  }
  for (size_t j = 0; j < rep.increment_covariances.size(); ++j) {
    const double ratio = std::fabs(rep.increment_covariances[j]) / rep.increment_cov_ses[j];
    worst_inc = std::max(worst_inc, ratio);
    if (ratio > 3.0) pass = false;
  }
  const double ks = rep.ks_statistics.back();  // B(1) against N(0,1)
  if (!(ks < 0.04)) pass = false;
  detail << "mean/tol max " << std::round(worst_mean * 100) / 100 << ", |var-v|/tol max "
         << std::round(worst_var * 100) / 100 << ", incr-cov/SE max "
         << std::round(worst_inc * 100) / 100 << ", KS(B(1)) = " << ks << " (< 0.04)";
  report(4, "Brownian rescaling diagnostics", pass, detail.str(), shared.elapsed, 180.0);
}

void criterion_5_field() {
  const auto start = std::chrono::steady_clock::now();
  DesignConfig cfg = trial_config(200, 20.0, 0.4, 0.15, 16.0, 32.0, 811005);
  cfg.beta0 = {0.4, 0.5};  // vector-valued score field
  ValidationGrids grids;
  grids.t_grid = {6.0, 9.0, 12.0};
  grids.theta_grid = {3.0, 4.5, 6.0};
  const ReplicateSet set = run_replicates(cfg, 2000, grids, 0);
  DiagnosticsReport rep;
  field_diagnostics(set, rep);
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "cov(p,q) vs cov at pairwise-min point: max |diff|/jackknife-SE = %.2f (< 4), "
                "max |diff| = %.3g",
                rep.minmatch_worst_se_ratio, rep.minmatch_max_discrepancy);
  report(5, "two-parameter field covariance min-match", rep.minmatch_worst_se_ratio < 4.0,
         detail, seconds_since(start), 240.0);
}

void criterion_6_estimation() {
  const auto start = std::chrono::steady_clock::now();
  DesignConfig cfg = trial_config(400, 40.0, std::log(2.0), 0.10, 16.0, 65.0, 811003);
  ValidationGrids grids;
  grids.with_estimation = true;
  grids.est_v_grid = {0.5, 1.0};
  const ReplicateSet set = run_replicates(cfg, 2000, grids, 0);

  int covered = 0, converged = 0, failed = 0;
  std::vector<std::vector<double>> stat(grids.est_v_grid.size());
  for (const auto& rec : set.per_replicate) {
    if (rec.failed) {
      ++failed;
      continue;
    }
    if (rec.beta_end_converged) {
      ++converged;
      if (rec.ci_covers) ++covered;
    }
    for (size_t j = 0; j < grids.est_v_grid.size(); ++j)
      if (rec.beta_at_v_ok[j])
        stat[j].push_back(std::sqrt(cfg.planned_information) * grids.est_v_grid[j] *
                          (rec.beta_at_v[j] - cfg.beta0[0]));
  }
  bool pass = failed + (set.R - failed - converged) <= set.R / 50;
  const double coverage = static_cast<double>(covered) / converged;
  if (!(coverage >= 0.93 && coverage <= 0.97)) pass = false;

  std::ostringstream detail;
  detail << "coverage = " << coverage << " (0.95 +- 0.02)";
  for (size_t j = 0; j < grids.est_v_grid.size(); ++j) {
    const double v = grids.est_v_grid[j];
    if (stat[j].size() < set.R * 0.98) pass = false;
    const double var = variance(stat[j]);
    const double tol = 4.0 * se_variance(stat[j]);
    if (std::fabs(var - v) > tol) pass = false;
    detail << "; var(sqrt(Vn) v (bhat(v)-b0)) at v=" << v << " is " << std::round(var * 1000) / 1000
           << " (|diff| " << std::round(std::fabs(var - v) * 1000) / 1000 << " < 4 SE = "
           << std::round(tol * 1000) / 1000 << ")";
  }
  report(6, "estimator coverage and rescaled-error variance", pass, detail.str(),
         seconds_since(start), 240.0);
}

void criterion_7_sequential() {
  const auto start = std::chrono::steady_clock::now();

  // Boundary checks first: single-look quantile and the dense-grid oracle.
  MonitoringPlan single;
  single.alpha = 0.05;
  single.v_grid = {1.0};
  single.planned_information = 1.0;
  const double c_single = compute_boundaries(single)[0];
  const bool single_ok = std::fabs(c_single - 1.95996) < 1e-4;

  MonitoringPlan two;
  two.alpha = 0.05;
  two.v_grid = {0.5, 1.0};
  two.planned_information = 1.0;
  const std::vector<double> c_two = compute_boundaries(two);
  const double pi1 = total_spending(two, 0.5);
  const testutil::TwoLookOracle oracle =
      testutil::oracle_two_look(0.5, 1.0, pi1, two.alpha - pi1, true, 40001);
  const bool two_ok = std::fabs(c_two[0] - oracle.c1) < 5e-3 &&
                      std::fabs(c_two[1] - oracle.c2) < 5e-3 &&
                      std::fabs(c_two[0] - 2.963) < 5e-3 && std::fabs(c_two[1] - 1.969) < 5e-3;

  // Null operating characteristics under play-the-winner allocation.
  DesignConfig cfg = trial_config(200, 20.0, 0.0, 0.10, 20.0, 36.0, 811004);
  ValidationGrids grids;
  grids.with_monitoring = true;
  grids.plan.alpha = 0.05;
  grids.plan.spending = Spending::obrien_fleming_type;
  grids.plan.sidedness = Sidedness::two;
  grids.plan.v_grid = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  grids.plan.planned_information = cfg.planned_information;
  grids.plan.null_beta = 0.0;
  const ReplicateSet set = run_replicates(cfg, 5000, grids, 0);
  int rejected = 0, usable = 0;
  for (const auto& rec : set.per_replicate) {
    if (rec.failed) continue;
    ++usable;
    if (rec.rejected_look > 0) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / usable;
  const bool rate_ok = rate >= 0.035 && rate <= 0.065 && usable >= 4900;

  char detail[240];
  std::snprintf(detail, sizeof(detail),
                "type-I rate = %.4f (in [0.035, 0.065], R=%d); c1(single) = %.5f; "
                "two-look OBF = (%.4f, %.4f) vs oracle (%.4f, %.4f)",
                rate, usable, c_single, c_two[0], c_two[1], oracle.c1, oracle.c2);
  report(7, "sequential operating characteristics", single_ok && two_ok && rate_ok, detail,
         seconds_since(start), 300.0);
}

// --- determinism ------------------------------------------------------------

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    out[fs::relative(entry.path(), dir).string()] = ss.str();
  }
  return out;
}

int run_cli_vec(std::vector<std::string> args) {
  std::vector<const char*> argv = {"adaptsurv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return as_run(static_cast<int>(argv.size()), argv.data());
}

void criterion_8_determinism() {
  const auto start = std::chrono::steady_clock::now();
  setenv("SOURCE_DATE_EPOCH", "0", 1);

  const fs::path root = fs::temp_directory_path() / "adaptsurv_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  const std::string config = R"([design]
n = 60
beta0 = 0.4
entry_rate = 10.0
planned_information = 8.0
seed = 321

[hazard]
rates = 1.0
censor_rate = 0.1
admin_horizon = 18

[allocation]
policy = randomized_play_the_winner
response_window = 1.0

[monitoring]
looks = 3
alpha = 0.05
spending = obrien_fleming_type
sided = two

[validation]
replicates = 600
v_grid = 0.5, 1.0
t_grid = 6, 9
theta_grid = 3, 5
)";
  const fs::path cfg_path = root / "c.cfg";
  {
    std::ofstream f(cfg_path);
    f << config;
  }

  bool pass = true;
  std::string first_failure;
  const auto twice = [&](const std::string& label, std::vector<std::string> args) {
    const fs::path out1 = root / (label + "_1");
    const fs::path out2 = root / (label + "_2");
    std::vector<std::string> a1 = args, a2 = args;
    a1.push_back("--out");
    a1.push_back(out1.string());
    a2.push_back("--out");
    a2.push_back(out2.string());
    if (run_cli_vec(a1) != 0 || run_cli_vec(a2) != 0) {
      pass = false;
      if (first_failure.empty()) first_failure = label + " exited nonzero";
      return;
    }
    if (dir_contents(out1) != dir_contents(out2)) {
      pass = false;
      if (first_failure.empty()) first_failure = label + " outputs differ";
    }
  };

  twice("simulate", {"simulate", "--config", cfg_path.string()});
  const std::string trial_csv = (root / "simulate_1" / "trial.csv").string();
  twice("score", {"score", "--trial", trial_csv, "--beta", "0.4", "--t", "12"});
  twice("estimate", {"estimate", "--trial", trial_csv});
  twice("boundaries", {"boundaries", "--alpha", "0.05", "--looks", "3"});
  twice("monitor", {"monitor", "--trial", trial_csv, "--config", cfg_path.string()});
  twice("validate", {"validate", "--config", cfg_path.string(), "--replicates", "600",
                     "--threads", "2"});

  // Worker count must not leak into the outputs.
  {
    const fs::path out1 = root / "validate_t1";
    const fs::path out2 = root / "validate_t2";
    run_cli_vec({"validate", "--config", cfg_path.string(), "--replicates", "600", "--threads",
                 "1", "--out", out1.string()});
    run_cli_vec({"validate", "--config", cfg_path.string(), "--replicates", "600", "--threads",
                 "2", "--out", out2.string()});
    if (dir_contents(out1) != dir_contents(out2)) {
      pass = false;
      if (first_failure.empty()) first_failure = "validate differs across thread counts";
    }
  }

  fs::remove_all(root);
  report(8, "byte-identical reruns of every subcommand", pass,
         pass ? "simulate/score/estimate/boundaries/monitor/validate identical across reruns "
                "and thread counts"
              : first_failure,
         seconds_since(start), 300.0);
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  std::printf("acceptance suite (seeded, deterministic)\n");
  criterion_1_oracle();
  criterion_2_gradients();
  const SharedRunA shared = run_config_a();
  criterion_3_martingale(shared);
  criterion_4_brownian(shared);
  criterion_5_field();
  criterion_6_estimation();
  criterion_7_sequential();
  criterion_8_determinism();
  std::printf("%s: %d criterion(s) failed [total %.1f s]\n", g_failures == 0 ? "OK" : "FAILURES",
              g_failures, seconds_since(start));
  return g_failures;
}
