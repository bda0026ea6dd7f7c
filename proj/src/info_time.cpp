#include "info_time.hpp"

#include <cmath>
#include <limits>

#include "cox.hpp"
#include "errors.hpp"

namespace adaptsurv {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

InformationPath information_path(const TrialData& data, double beta, double planned) {
  if (data.covariate_dim() > 1) fail(Err::dimension, "information rescaling requires d == 1");
  if (!(planned > 0.0)) fail(Err::validation, "planned information must be > 0");
  CoxEval eval(data, {beta});
  InformationPath path;
  path.planned = planned;
  for (const Subject& s : data.subjects)
    if (s.event_indicator == 1) path.event_times.push_back(s.completion_time());
  std::sort(path.event_times.begin(), path.event_times.end());
  path.vhat_at_events.reserve(path.event_times.size());
  for (double t : path.event_times) path.vhat_at_events.push_back(eval.vhat_scalar(t));
  return path;
}

double sigma_hat(const InformationPath& path, double v) {
  if (!(v > 0.0)) fail(Err::validation, "information fraction must be > 0");
  for (size_t k = 0; k < path.event_times.size(); ++k)
    if (path.vhat_at_events[k] / path.planned >= v) return path.event_times[k];
  fail(Err::information_not_reached,
       "information fraction " + std::to_string(v) + " not reached by the horizon");
}

RescaledPath bhat_path(const TrialData& data, double beta, const std::vector<double>& v_grid,
                       double planned) {
  const InformationPath path = information_path(data, beta, planned);
  CoxEval eval(data, {beta});
  const double root = std::sqrt(planned);

  RescaledPath out;
  out.v_grid = v_grid;
  out.sigma_hat.assign(v_grid.size(), kNaN);
  out.bhat.assign(v_grid.size(), kNaN);
  out.reached.assign(v_grid.size(), 0);
  out.dipped.assign(v_grid.size(), 0);

  for (size_t j = 0; j < v_grid.size(); ++j) {
    const double v = v_grid[j];
    size_t cross = path.event_times.size();
    for (size_t k = 0; k < path.event_times.size(); ++k) {
      if (path.vhat_at_events[k] / planned >= v) {
        cross = k;
        break;
      }
    }
    if (cross == path.event_times.size()) continue;
    const double sig = path.event_times[cross];
    out.sigma_hat[j] = sig;
    out.bhat[j] = eval.score_scalar(sig) / root;
    out.reached[j] = 1;
    for (size_t k = cross + 1; k < path.event_times.size(); ++k)
      if (path.vhat_at_events[k] / planned < v) {
        out.dipped[j] = 1;
        break;
      }
  }
  return out;
}

}  // namespace adaptsurv
