#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace adaptsurv {

AllocationPolicy::AllocationPolicy(PolicySpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind == PolicyKind::randomized_play_the_winner)
    urn_[0] = urn_[1] = spec_.initial_balls_per_arm;
}

bool AllocationPolicy::is_success(const CompletedOutcome& o) const {
  if (spec_.success_rule == SuccessRule::survival_past_window)
    return o.observed_time >= spec_.response_window;
  return o.event_indicator == 1 && o.observed_time <= spec_.response_window;
}

std::string AllocationPolicy::state_string() const {
  switch (spec_.kind) {
    case PolicyKind::randomized_play_the_winner:
      return "urn=" + std::to_string(urn_[0]) + ":" + std::to_string(urn_[1]);
    case PolicyKind::complete_randomization:
      return "p=" + std::to_string(spec_.p);
    case PolicyKind::deterministic_alternation:
      return "next=" + std::to_string(next_alternation_);
    case PolicyKind::peek_future:
      return "peek";
  }
  return "";
}

int AllocationPolicy::allocate(double entry_time, const std::vector<CompletedOutcome>& history,
                               Rng& rng, AllocationLogEntry& log, const double* own_future) {
  for (const auto& o : history)
    if (o.completion_time > entry_time)
      fail(Err::allocation_history,
           "allocation history contains an outcome completed after entry time");

  log.entry_time = entry_time;
  log.referenced_subjects.clear();

  // Fold newly observed outcomes (completed strictly before entry) into the
  // policy state. History is completion-sorted, so this is a growing prefix.
  if (spec_.kind == PolicyKind::randomized_play_the_winner) {
    while (consumed_ < history.size() && history[consumed_].completion_time < entry_time) {
      const auto& o = history[consumed_];
      const int credit = is_success(o) ? o.arm : 1 - o.arm;
      urn_[credit] += spec_.balls_added;
      log.referenced_subjects.push_back(o.subject);
      ++consumed_;
    }
  }

  log.state = state_string();

  int arm = 0;
  double u = std::numeric_limits<double>::quiet_NaN();
  switch (spec_.kind) {
    case PolicyKind::complete_randomization:
      u = rng.uniform();
      arm = u < spec_.p ? 1 : 0;
      break;
    case PolicyKind::randomized_play_the_winner: {
      u = rng.uniform();
      const double p1 = static_cast<double>(urn_[1]) / static_cast<double>(urn_[0] + urn_[1]);
      arm = u < p1 ? 1 : 0;
      break;
    }
    case PolicyKind::deterministic_alternation:
      arm = next_alternation_;
      next_alternation_ = 1 - next_alternation_;
      break;
    case PolicyKind::peek_future: {
      // Negative control: reads the subject's own latent draw, which only
      // becomes observable after entry. Subjects headed for an early event
      // land on arm 1.
      if (own_future == nullptr) fail(Err::internal, "peek_future policy needs the latent draw");
      arm = *own_future < 0.6931471805599453 ? 1 : 0;  // median of Exp(1)
      break;
    }
  }
  log.arm = arm;
  log.uniform_draw = u;
  return arm;
}

std::vector<double> generate_entry_times(const EntryProcess& entry, int n, double horizon,
                                         uint64_t trial_seed) {
  if (n < 1) fail(Err::validation, "need at least one entry");
  std::vector<double> out;
  out.reserve(n);
  if (entry.kind == EntryKind::fixed_schedule) {
    if (static_cast<int>(entry.times.size()) < n)
      fail(Err::validation, "fixed schedule shorter than target enrollment");
    for (int i = 0; i < n; ++i) {
      const double u = entry.times[i];
      if (i > 0 && !(u > out.back()))
        fail(Err::validation, "fixed schedule entries must be strictly increasing");
      out.push_back(u);
    }
  } else {
    if (!(entry.rate > 0.0)) fail(Err::validation, "entry rate must be > 0");
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      Rng stream = Rng::stream(trial_seed, StreamDomain::entry, static_cast<uint64_t>(i));
      t += stream.exponential(entry.rate);
      out.push_back(t);
    }
  }
  if (!(out.back() < horizon))
    fail(Err::schedule_exceeds_horizon, "entry schedule reaches the study horizon");
  return out;
}

double invert_event_time(const HazardSpec& hazard, const std::vector<double>& beta,
                         const CovariatePath& path, double exp_draw) {
  if (static_cast<int>(beta.size()) != path.dim)
    fail(Err::dimension, "beta dimension differs from covariate path");
  // Breakpoints where the integrand exp(beta'Z(w)) * lambda0(w) changes.
  std::vector<double> brk;
  brk.reserve(hazard.cut_points.size() + path.jump_times.size());
  brk.insert(brk.end(), hazard.cut_points.begin(), hazard.cut_points.end());
  brk.insert(brk.end(), path.jump_times.begin(), path.jump_times.end());
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  double acc = 0.0;
  for (size_t s = 0; s < brk.size(); ++s) {
    const double a = brk[s];
    const double b = s + 1 < brk.size() ? brk[s + 1] : kInf;
    const double* z = path.at(a);
    double eta = 0.0;
    for (int k = 0; k < path.dim; ++k) eta += beta[k] * z[k];
    const double slope = std::exp(eta) * hazard.rate_at(a);
    const double seg = slope * (b - a);
    if (exp_draw <= acc + seg || s + 1 == brk.size()) return a + (exp_draw - acc) / slope;
    acc += seg;
  }
  fail(Err::internal, "event time inversion fell through");
}

double sample_event_time(const HazardSpec& hazard, const std::vector<double>& beta,
                         const CovariatePath& path, Rng& rng) {
  return invert_event_time(hazard, beta, path, rng.exponential(1.0));
}

SimOutcome simulate_trial(const DesignConfig& config) { return simulate_trial(config, config.seed); }

SimOutcome simulate_trial(const DesignConfig& config, uint64_t seed) {
  config.validate();
  const int n = config.target_enrollment;
  const int d = config.dim();
  const double tau = config.hazard.admin_horizon;

  const std::vector<double> entries =
      generate_entry_times(config.entry_process, n, tau, seed);

  AllocationPolicy policy(config.allocation_policy);
  const bool peeking = config.allocation_policy.kind == PolicyKind::peek_future;

  std::vector<Subject> subjects;
  subjects.reserve(n);
  std::vector<AllocationLogEntry> log(n);
  std::vector<CompletedOutcome> completed;  // sorted by completion time
  completed.reserve(n);

  for (int i = 0; i < n; ++i) {
    const double u_i = entries[i];

    // Outcomes completed by this entry time, in completion order.
    std::vector<CompletedOutcome> history;
    history.reserve(completed.size());
    for (const auto& o : completed)
      if (o.completion_time < u_i) history.push_back(o);

    // The latent exponential is arm-independent, so it can be drawn up
    // front; only the negative control looks at it before allocating.
    Rng event_stream = Rng::stream(seed, StreamDomain::event, static_cast<uint64_t>(i));
    const double exp_draw = event_stream.exponential(1.0);

    Rng alloc_stream = Rng::stream(seed, StreamDomain::allocation, static_cast<uint64_t>(i));
    const int arm =
        policy.allocate(u_i, history, alloc_stream, log[i], peeking ? &exp_draw : nullptr);
    if (peeking) log[i].referenced_subjects.push_back(i);

    std::vector<double> z(static_cast<size_t>(d), 0.0);
    z[0] = static_cast<double>(arm) * config.arm_scale;
    if (d > 1) {
      Rng cov_stream = Rng::stream(seed, StreamDomain::covariate, static_cast<uint64_t>(i));
      for (int k = 1; k < d; ++k) z[k] = cov_stream.uniform(-1.0, 1.0);
    }
    CovariatePath path = CovariatePath::constant(std::move(z));
    path.check_bound(config.covariate_bound);

    const double t_event = invert_event_time(config.hazard, config.beta0, path, exp_draw);

    double c_latent = tau - u_i;  // administrative censoring folded in
    if (config.hazard.censor_rate > 0.0) {
      Rng censor_stream = Rng::stream(seed, StreamDomain::censor, static_cast<uint64_t>(i));
      c_latent = std::min(c_latent, censor_stream.exponential(config.hazard.censor_rate));
    }

    Subject s = Subject::make(u_i, std::move(path), t_event, c_latent, arm);
    CompletedOutcome o{i, s.completion_time(), s.observed_time, s.event_indicator, s.arm};
    completed.insert(std::upper_bound(completed.begin(), completed.end(), o,
                                      [](const CompletedOutcome& a, const CompletedOutcome& b) {
                                        return a.completion_time < b.completion_time;
                                      }),
                     o);
    subjects.push_back(std::move(s));
  }

  SimOutcome out;
  out.trial = TrialData::build(std::move(subjects), tau, config.beta0, config.hazard,
                               config.covariate_bound);
  out.allocation_log = std::move(log);
  return out;
}

std::vector<int> audit_allocation_history(const SimOutcome& outcome) {
  std::vector<int> violations;
  const auto& subjects = outcome.trial.subjects;
  for (size_t i = 0; i < outcome.allocation_log.size(); ++i) {
    const auto& entry = outcome.allocation_log[i];
    for (int ref : entry.referenced_subjects) {
      if (ref < 0 || ref >= static_cast<int>(subjects.size()) ||
          !(subjects[ref].completion_time() < entry.entry_time)) {
        violations.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return violations;
}

}  // namespace adaptsurv
