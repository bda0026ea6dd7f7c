#include "trial.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace adaptsurv {

CovariatePath CovariatePath::constant(std::vector<double> z) {
  CovariatePath p;
  p.dim = static_cast<int>(z.size());
  p.jump_times = {0.0};
  p.values = std::move(z);
  if (p.dim < 1) fail(Err::validation, "covariate path needs dimension >= 1");
  return p;
}

CovariatePath CovariatePath::step(std::vector<double> jump_times, std::vector<double> flat_values,
                                  int dim) {
  if (dim < 1) fail(Err::validation, "covariate path needs dimension >= 1");
  if (jump_times.empty() || jump_times.front() != 0.0)
    fail(Err::validation, "covariate path must start at w = 0");
  for (size_t i = 1; i < jump_times.size(); ++i)
    if (!(jump_times[i] > jump_times[i - 1]))
      fail(Err::validation, "covariate jump times must be strictly increasing");
  if (flat_values.size() != jump_times.size() * static_cast<size_t>(dim))
    fail(Err::validation, "covariate path values do not match segment count");
  for (double v : flat_values)
    if (!std::isfinite(v)) fail(Err::validation, "covariate values must be finite");
  CovariatePath p;
  p.jump_times = std::move(jump_times);
  p.values = std::move(flat_values);
  p.dim = dim;
  return p;
}

int CovariatePath::segment_index(double w) const {
  // Right-continuous: segment s applies on [jump_times[s], jump_times[s+1]).
  const int m = segments();
  if (m == 1 || w < jump_times[1]) return 0;
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), w);
  return static_cast<int>(it - jump_times.begin()) - 1;
}

double CovariatePath::total_variation() const {
  double tv = 0.0;
  for (int k = 0; k < dim; ++k) tv += std::fabs(values[k]);
  for (int s = 1; s < segments(); ++s)
    for (int k = 0; k < dim; ++k) tv += std::fabs(values[s * dim + k] - values[(s - 1) * dim + k]);
  return tv;
}

void CovariatePath::check_bound(double k_tau) const {
  const double tv = total_variation();
  if (!(tv <= k_tau))
    fail(Err::validation, "covariate path variation " + std::to_string(tv) +
                              " exceeds configured bound " + std::to_string(k_tau));
}

Subject Subject::make(double entry, CovariatePath z, double latent_event, double latent_censor,
                      int arm) {
  if (!(entry >= 0.0)) fail(Err::validation, "entry time must be >= 0");
  if (!(latent_event > 0.0)) fail(Err::validation, "event time must be > 0");
  if (!(latent_censor > 0.0)) fail(Err::validation, "censoring time must be > 0");
  Subject s;
  s.entry_time = entry;
  s.covariates = std::move(z);
  s.latent_event = latent_event;
  s.latent_censor = latent_censor;
  s.observed_time = std::min(latent_event, latent_censor);
  s.event_indicator = latent_event <= latent_censor ? 1 : 0;
  s.arm = arm;
  return s;
}

void HazardSpec::validate() const {
  if (cut_points.empty() || cut_points.front() != 0.0)
    fail(Err::validation, "hazard cut points must start at 0");
  if (cut_points.size() != rates.size())
    fail(Err::validation, "hazard needs one rate per cut point");
  for (size_t i = 1; i < cut_points.size(); ++i)
    if (!(cut_points[i] > cut_points[i - 1]))
      fail(Err::validation, "hazard cut points must be strictly increasing");
  for (double r : rates)
    if (!(r > 0.0) || !std::isfinite(r)) fail(Err::validation, "hazard rates must be positive");
  if (!(censor_rate >= 0.0)) fail(Err::validation, "censor rate must be >= 0");
  if (!(admin_horizon > 0.0)) fail(Err::validation, "administrative horizon must be > 0");
}

double HazardSpec::rate_at(double w) const {
  const auto it = std::upper_bound(cut_points.begin(), cut_points.end(), w);
  const int idx = std::max<int>(0, static_cast<int>(it - cut_points.begin()) - 1);
  return rates[idx];
}

double HazardSpec::cumulative(double w) const {
  if (w <= 0.0) return 0.0;
  double h = 0.0;
  for (size_t s = 0; s < cut_points.size(); ++s) {
    const double a = cut_points[s];
    const double b = s + 1 < cut_points.size() ? cut_points[s + 1] : kInf;
    if (w <= a) break;
    h += rates[s] * (std::min(w, b) - a);
  }
  return h;
}

double HazardSpec::inverse_cumulative(double h) const {
  if (h <= 0.0) return 0.0;
  double acc = 0.0;
  for (size_t s = 0; s < cut_points.size(); ++s) {
    const double a = cut_points[s];
    const double b = s + 1 < cut_points.size() ? cut_points[s + 1] : kInf;
    const double seg = rates[s] * (b - a);
    if (h <= acc + seg || s + 1 == cut_points.size()) return a + (h - acc) / rates[s];
    acc += seg;
  }
  return kInf;  // unreachable: last segment is unbounded
}

int TrialData::entries_by(double t) const {
  int c = 0;
  for (const auto& s : subjects) {
    if (s.entry_time <= t) ++c;
    else break;
  }
  return c;
}

bool TrialData::has_tied_event_times() const {
  std::vector<double> times;
  for (const auto& s : subjects)
    if (s.event_indicator == 1) times.push_back(s.completion_time());
  std::sort(times.begin(), times.end());
  return std::adjacent_find(times.begin(), times.end()) != times.end();
}

TrialData TrialData::build(std::vector<Subject> subjects, double horizon,
                           std::vector<double> true_beta,
                           std::optional<HazardSpec> baseline_hazard, double covariate_bound) {
  std::sort(subjects.begin(), subjects.end(),
            [](const Subject& a, const Subject& b) { return a.entry_time < b.entry_time; });
  const int d = subjects.empty() ? 0 : subjects.front().covariates.dim;
  for (size_t i = 0; i < subjects.size(); ++i) {
    const auto& s = subjects[i];
    if (i > 0 && !(s.entry_time > subjects[i - 1].entry_time))
      fail(Err::validation, "tied entry times at U = " + std::to_string(s.entry_time));
    if (!(s.entry_time < horizon))
      fail(Err::validation, "entry time at or past the study horizon");
    if (s.covariates.dim != d)
      fail(Err::validation, "covariate dimension differs across subjects");
    if (std::isfinite(covariate_bound)) s.covariates.check_bound(covariate_bound);
    if (s.observed_time != std::min(s.latent_event, s.latent_censor) ||
        s.event_indicator != (s.latent_event <= s.latent_censor ? 1 : 0))
      fail(Err::validation, "inconsistent observed time or event indicator");
  }
  if (!true_beta.empty() && static_cast<int>(true_beta.size()) != d)
    fail(Err::validation, "true beta dimension differs from covariates");
  TrialData t;
  t.subjects = std::move(subjects);
  t.horizon = horizon;
  t.true_beta = std::move(true_beta);
  t.baseline_hazard = std::move(baseline_hazard);
  return t;
}

void PolicySpec::validate() const {
  switch (kind) {
    case PolicyKind::complete_randomization:
      if (!(p > 0.0 && p < 1.0))
        fail(Err::validation, "complete randomization needs p in (0,1)");
      break;
    case PolicyKind::randomized_play_the_winner:
      if (initial_balls_per_arm < 1) fail(Err::validation, "urn needs at least one ball per arm");
      if (balls_added < 1) fail(Err::validation, "balls_added must be >= 1");
      if (!(response_window > 0.0)) fail(Err::validation, "response window must be > 0");
      break;
    case PolicyKind::deterministic_alternation:
    case PolicyKind::peek_future:
      break;
  }
}

void DesignConfig::validate() const {
  if (target_enrollment < 1) fail(Err::validation, "target enrollment must be >= 1");
  if (beta0.empty()) fail(Err::validation, "beta0 must have dimension >= 1");
  for (double b : beta0)
    if (!std::isfinite(b)) fail(Err::validation, "beta0 must be finite");
  if (!(planned_information > 0.0)) fail(Err::validation, "planned information must be > 0");
  if (!(v_bar > 0.0 && v_bar <= 1.0)) fail(Err::validation, "v_bar must lie in (0, 1]");
  if (!(covariate_bound > 0.0)) fail(Err::validation, "covariate bound must be > 0");
  if (!(arm_scale != 0.0) || !std::isfinite(arm_scale))
    fail(Err::validation, "arm scale must be finite and nonzero");
  hazard.validate();
  if (!std::isfinite(hazard.admin_horizon))
    fail(Err::validation, "study horizon must be finite");
  allocation_policy.validate();
  if (entry_process.kind == EntryKind::poisson) {
    if (!(entry_process.rate > 0.0)) fail(Err::validation, "entry rate must be > 0");
  } else {
    if (static_cast<int>(entry_process.times.size()) != target_enrollment)
      fail(Err::validation, "fixed schedule length must equal target enrollment");
  }
}

}  // namespace adaptsurv
