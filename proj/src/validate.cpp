#include "validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "info_time.hpp"
#include "mple.hpp"
#include "parallel.hpp"
#include "sim.hpp"
#include "stats.hpp"

namespace adaptsurv {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> oracle_score(const TrialData& data, const std::vector<double>& beta, double t,
                                 double theta, ScoreVariant variant) {
  const int d = data.covariate_dim();
  if (static_cast<int>(beta.size()) != d) fail(Err::dimension, "beta dimension mismatch");
  std::vector<double> u(d, 0.0);
  for (const Subject& ev : data.subjects) {
    if (ev.event_indicator != 1) continue;
    if (ev.entry_time > theta) continue;
    if (ev.entry_time + ev.observed_time > t) continue;
    const double w = ev.observed_time;
    const double cutoff =
        variant == ScoreVariant::full_riskset ? t - w : std::min(theta, t - w);
    double g0 = 0.0;
    std::vector<double> g1(d, 0.0);
    for (const Subject& s : data.subjects) {
      // The failing subject stays in its own risk set even when t - w lands
      // one rounding step under its entry time.
      if (s.entry_time > cutoff && &s != &ev) continue;
      if (s.observed_time < w) continue;
      const double* z = s.covariates.at(w);
      double eta = 0.0;
      for (int k = 0; k < d; ++k) eta += beta[k] * z[k];
      const double we = std::exp(eta);
      g0 += we;
      for (int k = 0; k < d; ++k) g1[k] += z[k] * we;
    }
    if (!(g0 > 0.0)) fail(Err::empty_risk_set, "oracle risk set empty at an event");
    const double* z = ev.covariates.at(w);
    for (int k = 0; k < d; ++k) u[k] += z[k] - g1[k] / g0;
  }
  return u;
}

std::vector<double> compensated_score(const TrialData& data, const std::vector<double>& beta,
                                      double t, double theta, const HazardSpec& lambda0) {
  const int d = data.covariate_dim();
  if (!(theta <= t)) fail(Err::validation, "entry cutoff must not exceed calendar time");
  CoxEval eval(data, beta);

  // Event-sum term under the full risk-set convention.
  std::vector<double> result(d, 0.0);
  std::vector<double> g1(d), zb(d);
  for (int i = 0; i < data.n(); ++i) {
    const Subject& ev = data.subjects[i];
    if (ev.event_indicator != 1 || ev.entry_time > theta) continue;
    if (ev.completion_time() > t) continue;
    const double w = ev.observed_time;
    const double g0 = eval.gamma(t - w, w, g1.data(), nullptr, i);
    if (!(g0 > 0.0)) fail(Err::empty_risk_set, "risk set empty at an event");
    const double* z = ev.covariates.at(w);
    for (int k = 0; k < d; ++k) result[k] += z[k] - g1[k] / g0;
  }

  // Compensator term: sum over admissible subjects of the integral of
  // (Z_j(w) - Zbar(t, w)) exp(beta'Z_j(w)) lambda0(w) over [0, W_j] with
  // W_j = min(observed, t - entry). The integrand is piecewise constant
  // between the pooled breakpoints, so each piece integrates exactly. The
  // inner subject sum collapses to Gamma moments at the member cutoff.
  double wmax = 0.0;
  bool any = false;
  for (const Subject& s : data.subjects) {
    if (s.entry_time > theta) continue;
    any = true;
    wmax = std::max(wmax, std::min(s.observed_time, t - s.entry_time));
  }
  if (!any || wmax <= 0.0) return result;

  std::vector<double> brk;
  brk.push_back(0.0);
  brk.push_back(wmax);
  for (double c : lambda0.cut_points)
    if (c > 0.0 && c < wmax) brk.push_back(c);
  for (const Subject& s : data.subjects) {
    if (s.observed_time > 0.0 && s.observed_time < wmax) brk.push_back(s.observed_time);
    const double drop = t - s.entry_time;  // leaves the risk-set average past this w
    if (drop > 0.0 && drop < wmax) brk.push_back(drop);
    for (double j : s.covariates.jump_times)
      if (j > 0.0 && j < wmax) brk.push_back(j);
  }
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  std::vector<double> g1m(d);
  for (size_t p = 0; p + 1 < brk.size(); ++p) {
    const double a = brk[p], b = brk[p + 1];
    const double len = b - a;
    if (!(len > 0.0)) continue;
    const double mid = a + 0.5 * len;
    const double g0 = eval.gamma(t - mid, mid, g1.data(), nullptr);
    if (!(g0 > 0.0)) continue;  // nobody at risk on this piece
    for (int k = 0; k < d; ++k) zb[k] = g1[k] / g0;
    const double g0m = eval.gamma(std::min(theta, t - mid), mid, g1m.data(), nullptr);
    const double lam = lambda0.rate_at(mid) * len;
    for (int k = 0; k < d; ++k) result[k] -= (g1m[k] - zb[k] * g0m) * lam;
  }
  return result;
}

TrialData random_small_trial(Rng& rng, int max_n, int dim, bool step_paths) {
  const int n = 2 + static_cast<int>(rng.uniform() * std::max(1, max_n - 1));
  std::vector<Subject> subjects;
  subjects.reserve(n);
  double u = 0.0;
  double horizon = 0.0;
  std::vector<double> entries(n);
  for (int i = 0; i < n; ++i) {
    u += 0.05 + rng.uniform() * 0.8;
    entries[i] = u;
  }
  horizon = u + 4.0 + rng.uniform() * 6.0;
  for (int i = 0; i < n; ++i) {
    CovariatePath path;
    if (step_paths && rng.uniform() < 0.5) {
      const int segs = 2 + (rng.uniform() < 0.4 ? 1 : 0);
      std::vector<double> jumps = {0.0};
      double jw = 0.0;
      for (int s = 1; s < segs; ++s) {
        jw += 0.3 + rng.uniform() * 2.0;
        jumps.push_back(jw);
      }
      std::vector<double> vals(static_cast<size_t>(segs) * dim);
      for (double& v : vals) v = rng.uniform(-1.5, 1.5);
      path = CovariatePath::step(std::move(jumps), std::move(vals), dim);
    } else {
      std::vector<double> z(dim);
      for (double& v : z) v = rng.uniform(-1.5, 1.5);
      path = CovariatePath::constant(std::move(z));
    }
    const double t_event = rng.exponential(0.3 + rng.uniform());
    const double censor = std::min(rng.exponential(0.25), horizon - entries[i]);
    const int arm = path.values[0] > 0.0 ? 1 : 0;
    subjects.push_back(Subject::make(entries[i], std::move(path), t_event, censor, arm));
  }
  return TrialData::build(std::move(subjects), horizon);
}

double oracle_equivalence_sweep(uint64_t seed, int trials, int max_n) {
  double worst = 0.0;
  for (int r = 0; r < trials; ++r) {
    Rng rng = Rng::stream(seed, StreamDomain::generic, static_cast<uint64_t>(r));
    const int dim = 1 + r % 3;
    const TrialData trial = random_small_trial(rng, max_n, dim, r % 2 == 1);
    for (int q = 0; q < 3; ++q) {
      std::vector<double> beta(dim);
      for (double& b : beta) b = rng.uniform(-0.8, 0.8);
      const double t = rng.uniform(0.5, trial.horizon);
      const double theta = rng.uniform(0.0, t);
      for (ScoreVariant variant :
           {ScoreVariant::full_riskset, ScoreVariant::subsample_riskset}) {
        const ScoreEvaluation ev = score(trial, beta, t, theta, variant);
        const std::vector<double> ref = oracle_score(trial, beta, t, theta, variant);
        for (int k = 0; k < dim; ++k) worst = std::max(worst, std::fabs(ev.score[k] - ref[k]));
      }
    }
  }
  return worst;
}

ReplicateSet run_replicates(const DesignConfig& config, int R, const ValidationGrids& grids,
                            int threads) {
  if (R < 2) fail(Err::insufficient_replicates, "need at least 2 replicates");
  config.validate();
  const bool scalar_parts = !grids.v_grid.empty() || grids.with_monitoring ||
                            grids.with_estimation || !grids.est_v_grid.empty();
  if (scalar_parts && config.dim() != 1)
    fail(Err::dimension, "rescaled-score and estimation diagnostics require d == 1");

  // Field grid points with theta <= t.
  std::vector<std::pair<double, double>> points;
  for (double t : grids.t_grid)
    for (double th : grids.theta_grid)
      if (th <= t) points.emplace_back(t, th);

  ReplicateSet set;
  set.config = config;
  set.grids = grids;
  set.R = R;
  set.per_replicate.resize(R);

  const int d = config.dim();
  parallel_for(R, threads, [&](int r) {
    ReplicateRecord& rec = set.per_replicate[r];
    rec.seed = derive_seed(config.seed, StreamDomain::replicate, static_cast<uint64_t>(r));
    try {
      const SimOutcome sim = simulate_trial(config, rec.seed);
      const TrialData& trial = sim.trial;
      const double n = static_cast<double>(trial.n());

      if (!grids.v_grid.empty()) {
        const RescaledPath path =
            bhat_path(trial, config.beta0[0], grids.v_grid, config.planned_information);
        rec.bhat = path.bhat;
        rec.bhat_reached = path.reached;
      }

      if (!points.empty()) {
        rec.field.reserve(points.size() * d);
        for (const auto& [t, th] : points) {
          const std::vector<double> u = compensated_score(trial, config.beta0, t, th, config.hazard);
          for (int k = 0; k < d; ++k) rec.field.push_back(u[k] / std::sqrt(n));
        }
      }

      if (grids.with_estimation) {
        const MpleResult res =
            solve_mple(trial, trial.horizon, trial.horizon, std::vector<double>(d, 0.0));
        rec.beta_end = res.beta_hat[0];
        rec.beta_end_converged = res.converged;
        rec.ci_covers = res.converged && res.ci_95[0][0] <= config.beta0[0] &&
                        config.beta0[0] <= res.ci_95[0][1];
      }

      if (!grids.est_v_grid.empty()) {
        rec.beta_at_v.assign(grids.est_v_grid.size(), kNaN);
        rec.beta_at_v_ok.assign(grids.est_v_grid.size(), 0);
        // One information path at the reference beta serves every fraction.
        const InformationPath path =
            information_path(trial, config.beta0[0], config.planned_information);
        for (size_t j = 0; j < grids.est_v_grid.size(); ++j) {
          try {
            const double sig = sigma_hat(path, grids.est_v_grid[j]);
            const MpleResult res = solve_mple(trial, sig, sig, {0.0});
            if (res.converged) {
              rec.beta_at_v[j] = res.beta_hat[0];
              rec.beta_at_v_ok[j] = 1;
            }
          } catch (const Error& e) {
            if (e.code != Err::information_not_reached) throw;
          }
        }
      }

      if (grids.with_monitoring) {
        const MonitorResult m = monitor_trial(trial, grids.plan, grids.plan.null_beta);
        rec.rejected_look = m.rejected_look;
        rec.looks_attained = static_cast<int>(m.sigma_hat.size());
      }

      {
        const ScoreEvaluation ev = score(trial, config.beta0, trial.horizon, trial.horizon,
                                         ScoreVariant::full_riskset);
        rec.info_minus_vhat_over_n = (ev.information[0] - ev.vhat[0]) / n;
      }
    } catch (const Error& e) {
      rec.failed = true;
      rec.failure = e.what();
    }
  });
  return set;
}

namespace {

double cov_se(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  const double mx = mean(x), my = mean(y);
  const double c = covariance(x, y);
  double m22 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double p = (x[i] - mx) * (y[i] - my);
    m22 += (p - c) * (p - c);
  }
  m22 /= static_cast<double>(n);
  return std::sqrt(m22 / static_cast<double>(n));
}

}  // namespace

void brownian_diagnostics(const ReplicateSet& set, DiagnosticsReport& report) {
  const auto& v_grid = set.grids.v_grid;
  if (v_grid.empty()) fail(Err::validation, "no rescaled-score grid in the replicate set");
  int usable = 0;
  for (const auto& rec : set.per_replicate)
    if (!rec.failed) ++usable;
  if (usable < 500)
    fail(Err::insufficient_replicates, "rescaled-score diagnostics need at least 500 replicates");

  report.v_grid = v_grid;
  report.replicates = set.R;
  const size_t K = v_grid.size();
  report.bhat_means.assign(K, kNaN);
  report.bhat_mean_ses.assign(K, kNaN);
  report.bhat_vars.assign(K, kNaN);
  report.bhat_var_ses.assign(K, kNaN);
  report.ks_statistics.assign(K, kNaN);
  report.attain_rates.assign(K, 0.0);

  for (size_t j = 0; j < K; ++j) {
    std::vector<double> vals;
    vals.reserve(set.per_replicate.size());
    for (const auto& rec : set.per_replicate) {
      if (rec.failed || rec.bhat_reached.size() <= j) continue;
      if (rec.bhat_reached[j]) vals.push_back(rec.bhat[j]);
    }
    report.attain_rates[j] = static_cast<double>(vals.size()) / std::max(1, usable);
    if (vals.size() < 4) continue;
    report.bhat_means[j] = mean(vals);
    report.bhat_mean_ses[j] = se_mean(vals);
    report.bhat_vars[j] = variance(vals);
    report.bhat_var_ses[j] = se_variance(vals);
    std::vector<double> standardized(vals);
    const double root = std::sqrt(v_grid[j]);
    for (double& x : standardized) x /= root;
    report.ks_statistics[j] = ks_normal(std::move(standardized));
  }

  // Consecutive disjoint increments from replicates that attained the whole
  // grid: cov(B(v1), B(v2)-B(v1)), cov(B(v2)-B(v1), B(v3)-B(v2)), ...
  report.increment_covariances.clear();
  report.increment_cov_ses.clear();
  std::vector<std::vector<double>> increments(K);
  for (const auto& rec : set.per_replicate) {
    if (rec.failed || rec.bhat_reached.size() != K) continue;
    bool all = true;
    for (auto b : rec.bhat_reached) all = all && b;
    if (!all) continue;
    increments[0].push_back(rec.bhat[0]);
    for (size_t j = 1; j < K; ++j) increments[j].push_back(rec.bhat[j] - rec.bhat[j - 1]);
  }
  if (!increments[0].empty() && increments[0].size() >= 4) {
    for (size_t j = 0; j + 1 < K; ++j) {
      report.increment_covariances.push_back(covariance(increments[j], increments[j + 1]));
      report.increment_cov_ses.push_back(cov_se(increments[j], increments[j + 1]));
    }
  }

  {
    std::vector<double> gaps;
    for (const auto& rec : set.per_replicate)
      if (!rec.failed) gaps.push_back(rec.info_minus_vhat_over_n);
    if (gaps.size() >= 4) report.info_vhat_mean_gap = mean(gaps);
  }
  report.failed_replicates = set.R - usable;
}

void field_diagnostics(const ReplicateSet& set, DiagnosticsReport& report) {
  std::vector<std::pair<double, double>> points;
  for (double t : set.grids.t_grid)
    for (double th : set.grids.theta_grid)
      if (th <= t) points.emplace_back(t, th);
  if (points.empty()) fail(Err::validation, "no field grid in the replicate set");
  const int d = set.config.dim();
  const size_t P = points.size();
  const size_t M = P * static_cast<size_t>(d);

  std::vector<const ReplicateRecord*> recs;
  for (const auto& rec : set.per_replicate)
    if (!rec.failed && rec.field.size() == M) recs.push_back(&rec);
  const size_t R = recs.size();
  if (R < 500) fail(Err::insufficient_replicates, "field diagnostics need at least 500 replicates");

  report.replicates = set.R;
  report.failed_replicates = set.R - static_cast<int>(R);
  report.field_t.clear();
  report.field_theta.clear();
  for (const auto& [t, th] : points) {
    report.field_t.push_back(t);
    report.field_theta.push_back(th);
  }

  // Means with standard errors (the martingale-mean face).
  report.field_means.assign(M, 0.0);
  report.field_mean_ses.assign(M, 0.0);
  std::vector<double> col(R);
  for (size_t m = 0; m < M; ++m) {
    for (size_t i = 0; i < R; ++i) col[i] = recs[i]->field[m];
    report.field_means[m] = mean(col);
    report.field_mean_ses[m] = se_mean(col);
  }

  // Full covariance matrix of the stacked vector.
  std::vector<double> mu = report.field_means;
  report.field_covariance_matrix.assign(M * M, 0.0);
  for (size_t i = 0; i < R; ++i) {
    const double* f = recs[i]->field.data();
    for (size_t a = 0; a < M; ++a)
      for (size_t b = a; b < M; ++b)
        report.field_covariance_matrix[a * M + b] += (f[a] - mu[a]) * (f[b] - mu[b]);
  }
  for (size_t a = 0; a < M; ++a)
    for (size_t b = a; b < M; ++b) {
      report.field_covariance_matrix[a * M + b] /= static_cast<double>(R - 1);
      report.field_covariance_matrix[b * M + a] = report.field_covariance_matrix[a * M + b];
    }

  // Min-match: C((t1,h1),(t2,h2)) should equal the covariance at the
  // pointwise-minimum grid point. Delete-one jackknife SE per comparison.
  report.minmatch_errors.clear();
  report.minmatch_ses.clear();
  report.minmatch_max_discrepancy = 0.0;
  report.minmatch_worst_se_ratio = 0.0;

  const auto point_index = [&](double t, double th) -> int {
    for (size_t p = 0; p < P; ++p)
      if (points[p].first == t && points[p].second == th) return static_cast<int>(p);
    return -1;
  };

  for (size_t p = 0; p < P; ++p) {
    for (size_t q = p; q < P; ++q) {
      const double tmin = std::min(points[p].first, points[q].first);
      const double hmin = std::min(points[p].second, points[q].second);
      const int m = point_index(tmin, hmin);
      if (m < 0) continue;
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          const size_t ix = p * d + a, iy = q * d + b;
          const size_t iw = static_cast<size_t>(m) * d + a, iz = static_cast<size_t>(m) * d + b;
          // Running sums for leave-one-out covariances of (x,y) and (w,z).
          double sx = 0, sy = 0, sxy = 0, sw = 0, sz = 0, swz = 0;
          for (size_t i = 0; i < R; ++i) {
            const double* f = recs[i]->field.data();
            sx += f[ix];
            sy += f[iy];
            sxy += f[ix] * f[iy];
            sw += f[iw];
            sz += f[iz];
            swz += f[iw] * f[iz];
          }
          const double Rn = static_cast<double>(R);
          const double D = (sxy - sx * sy / Rn) / (Rn - 1.0) - (swz - sw * sz / Rn) / (Rn - 1.0);
          if (p == q) {  // identity pair: zero by construction, no SE
            report.minmatch_errors.push_back(std::fabs(D));
            report.minmatch_ses.push_back(0.0);
            continue;
          }
          double jsum = 0.0, jsq = 0.0;
          for (size_t i = 0; i < R; ++i) {
            const double* f = recs[i]->field.data();
            const double r1 = Rn - 1.0, r2 = Rn - 2.0;
            const double cxy =
                ((sxy - f[ix] * f[iy]) - (sx - f[ix]) * (sy - f[iy]) / r1) / r2;
            const double cwz =
                ((swz - f[iw] * f[iz]) - (sw - f[iw]) * (sz - f[iz]) / r1) / r2;
            const double Di = cxy - cwz;
            jsum += Di;
            jsq += Di * Di;
          }
          const double jmean = jsum / Rn;
          const double se = std::sqrt(std::max(0.0, (Rn - 1.0) / Rn * (jsq - Rn * jmean * jmean)));
          report.minmatch_errors.push_back(std::fabs(D));
          report.minmatch_ses.push_back(se);
          report.minmatch_max_discrepancy = std::max(report.minmatch_max_discrepancy, std::fabs(D));
          if (se > 0.0)
            report.minmatch_worst_se_ratio =
                std::max(report.minmatch_worst_se_ratio, std::fabs(D) / se);
        }
      }
    }
  }
}

OperatingRates type1_and_coverage(const DesignConfig& null_config, const MonitoringPlan& plan,
                                  const DesignConfig& alt_config, int R, int threads) {
  OperatingRates rates;
  {
    ValidationGrids grids;
    grids.with_monitoring = true;
    grids.plan = plan;
    const ReplicateSet set = run_replicates(null_config, R, grids, threads);
    int rejected = 0, usable = 0;
    for (const auto& rec : set.per_replicate) {
      if (rec.failed) continue;
      ++usable;
      if (rec.rejected_look > 0) ++rejected;
    }
    rates.type1_failed = R - usable;
    if (rates.type1_failed > R / 50)
      fail(Err::validation, "more than 2% of monitoring replicates failed");
    rates.type1_rate = usable > 0 ? static_cast<double>(rejected) / usable : -1.0;
  }
  {
    ValidationGrids grids;
    grids.with_estimation = true;
    const ReplicateSet set = run_replicates(alt_config, R, grids, threads);
    int covered = 0, usable = 0;
    for (const auto& rec : set.per_replicate) {
      if (rec.failed || !rec.beta_end_converged) continue;
      ++usable;
      if (rec.ci_covers) ++covered;
    }
    rates.coverage_failed = R - usable;
    if (rates.coverage_failed > R / 50)
      fail(Err::validation, "more than 2% of coverage replicates failed");
    rates.coverage_rate = usable > 0 ? static_cast<double>(covered) / usable : -1.0;
  }
  return rates;
}

}  // namespace adaptsurv
