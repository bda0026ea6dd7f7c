#include "monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cox.hpp"
#include "errors.hpp"
#include "stats.hpp"

namespace adaptsurv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-density of the monitored process at one look, on a uniform Simpson
// grid spanning [-support, support]. The support is the current crossing
// boundary (continuation region) capped at span_sd standard deviations;
// mass beyond the cap is below 1e-15.
struct LookDensity {
  double support = 0.0;
  double step = 0.0;
  std::vector<double> values;

  double node(int i) const { return -support + step * i; }
};

double simpson_weight(int i, int last) {
  if (i == 0 || i == last) return 1.0 / 3.0;
  return (i % 2 == 1 ? 4.0 : 2.0) / 3.0;
}

// Integral of dens(x) * P(next increment crosses beyond +-b from x).
double crossing_probability(const LookDensity& dens, double s, double b, bool two_sided) {
  const int last = static_cast<int>(dens.values.size()) - 1;
  double acc = 0.0;
  for (int i = 0; i <= last; ++i) {
    const double x = dens.node(i);
    double tail = 1.0 - norm_cdf((b - x) / s);
    if (two_sided) tail += norm_cdf((-b - x) / s);
    acc += simpson_weight(i, last) * dens.values[i] * tail;
  }
  return acc * dens.step;
}

// Convolution of the continuation density with the N(0, s^2) increment on
// the next grid. The Gaussian kernel row is generated by a two-multiply
// recurrence so the inner loop stays exp-free; the window |q| <= 26 keeps
// every factor in the normal floating point range.
LookDensity convolve(const LookDensity& prev, double s, double support, int nodes) {
  LookDensity next;
  next.support = support;
  next.step = 2.0 * support / (nodes - 1);
  next.values.assign(nodes, 0.0);
  const int last = static_cast<int>(prev.values.size()) - 1;
  const double inv_s = 1.0 / s;
  const double norm = 0.3989422804014326779399461 * inv_s;
  const double dq = prev.step * inv_s;
  const double rho = std::exp(-dq * dq);
  const double qmax = 26.0;

  for (int j = 0; j < nodes; ++j) {
    const double y = next.node(j);
    const double q0 = (y - prev.node(0)) * inv_s;  // decreases along i
    int ilo = 0, ihi = last;
    if (q0 > qmax) ilo = static_cast<int>(std::ceil((q0 - qmax) / dq));
    if (q0 - dq * last < -qmax) ihi = static_cast<int>(std::floor((q0 + qmax) / dq));
    if (ilo > ihi) continue;

    double q = q0 - dq * ilo;
    double t = std::exp(-0.5 * q * q);
    double u = std::exp(dq * (q - 0.5 * dq));  // t_{i+1} / t_i at i = ilo
    double acc = 0.0;
    for (int i = ilo; i <= ihi; ++i) {
      acc += simpson_weight(i, last) * prev.values[i] * t;
      t *= u;
      u *= rho;
    }
    next.values[j] = acc * norm * prev.step;
  }
  return next;
}

// First-passage recursion advanced one look at a time. Feeding it the
// attained fractions as they materialize gives the same boundaries as a
// batch computation over the same grid.
class BoundaryRecursion {
 public:
  BoundaryRecursion(bool two_sided, int nodes, double span_sd)
      : two_sided_(two_sided), nodes_(nodes), span_sd_(span_sd) {}

  // Returns the B-scale boundary for a look at fraction v spending pi more.
  double step(double v, double pi) {
    const double sd = std::sqrt(v);
    const double s = first_ ? sd : std::sqrt(std::max(0.0, v - v_prev_));
    if (!first_ && !(s > 0.0))
      fail(Err::validation, "repeated information fraction in the boundary recursion");

    double b;
    if (pi < 1e-15) {
      b = kInf;
    } else if (first_) {
      b = sd * norm_quantile(two_sided_ ? 1.0 - pi / 2.0 : 1.0 - pi);
      realized_ += pi;
    } else {
      double lo = 0.0, hi = span_sd_ * sd * 1.5;
      if (crossing_probability(dens_, s, hi, two_sided_) > pi) {
        b = kInf;
      } else {
        for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          if (crossing_probability(dens_, s, mid, two_sided_) > pi) lo = mid;
          else hi = mid;
        }
        b = 0.5 * (lo + hi);
        realized_ += crossing_probability(dens_, s, b, two_sided_);
      }
    }

    const double support = std::min(b, span_sd_ * sd);
    if (first_) {
      LookDensity dens;
      dens.support = support;
      dens.step = 2.0 * support / (nodes_ - 1);
      dens.values.resize(nodes_);
      for (int i = 0; i < nodes_; ++i) dens.values[i] = norm_pdf(dens.node(i) / sd) / sd;
      dens_ = std::move(dens);
    } else {
      dens_ = convolve(dens_, s, support, nodes_);
    }
    first_ = false;
    v_prev_ = v;
    return b;
  }

  double realized_crossing() const { return realized_; }

 private:
  bool two_sided_;
  int nodes_;
  double span_sd_;
  bool first_ = true;
  double v_prev_ = 0.0;
  double realized_ = 0.0;
  LookDensity dens_;
};

std::vector<double> boundaries_on_grid(const std::vector<double>& v_grid, double alpha,
                                       Spending spending, Sidedness sidedness, int nodes,
                                       double span_sd) {
  const bool two = sidedness == Sidedness::two;
  const auto spent = [&](double v) {
    return two ? 2.0 * spending_value(spending, alpha / 2.0, v)
               : spending_value(spending, alpha, v);
  };
  BoundaryRecursion rec(two, nodes, span_sd);
  std::vector<double> bounds;
  bounds.reserve(v_grid.size());
  double spent_prev = 0.0;
  for (double v : v_grid) {
    const double spent_now = spent(v);
    bounds.push_back(rec.step(v, std::max(0.0, spent_now - spent_prev)));
    spent_prev = spent_now;
  }
  if (std::fabs(rec.realized_crossing() - spent_prev) > 1e-6)
    fail(Err::quadrature, "crossing probabilities deviate from the spent alpha by more than 1e-6");
  for (size_t k = 0; k < bounds.size(); ++k)
    if (std::isfinite(bounds[k])) bounds[k] /= std::sqrt(v_grid[k]);
  return bounds;
}

}  // namespace

void MonitoringPlan::validate() const {
  if (v_grid.empty()) fail(Err::validation, "monitoring plan needs at least one look");
  double prev = 0.0;
  for (double v : v_grid) {
    if (!(v > prev)) fail(Err::validation, "information fractions must be strictly increasing");
    prev = v;
  }
  if (!(v_grid.back() <= 1.0)) fail(Err::validation, "information fractions must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Err::validation, "alpha must lie in (0, 1)");
  if (!(planned_information > 0.0)) fail(Err::validation, "planned information must be > 0");
}

double spending_value(Spending spending, double alpha, double v) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Err::validation, "alpha must lie in (0, 1)");
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return alpha;
  switch (spending) {
    case Spending::obrien_fleming_type:
      return 2.0 * (1.0 - norm_cdf(norm_quantile(1.0 - alpha / 2.0) / std::sqrt(v)));
    case Spending::pocock_type:
      return alpha * std::log(1.0 + (2.718281828459045 - 1.0) * v);
    case Spending::linear:
      return alpha * v;
  }
  fail(Err::internal, "unknown spending function");
}

double total_spending(const MonitoringPlan& plan, double v) {
  return plan.sidedness == Sidedness::two
             ? 2.0 * spending_value(plan.spending, plan.alpha / 2.0, v)
             : spending_value(plan.spending, plan.alpha, v);
}

std::vector<double> compute_boundaries(const MonitoringPlan& plan, const BoundaryGridSpec& grid) {
  plan.validate();
  if (grid.nodes < 5 || grid.nodes % 2 == 0)
    fail(Err::validation, "boundary grid needs an odd node count >= 5");
  std::vector<double> bounds = boundaries_on_grid(plan.v_grid, plan.alpha, plan.spending,
                                                  plan.sidedness, grid.nodes, grid.span_sd);
  if (grid.self_check) {
    const std::vector<double> fine = boundaries_on_grid(
        plan.v_grid, plan.alpha, plan.spending, plan.sidedness, 2 * grid.nodes - 1, grid.span_sd);
    for (size_t k = 0; k < bounds.size(); ++k) {
      if (std::isinf(bounds[k]) != std::isinf(fine[k]))
        fail(Err::quadrature, "boundary self-test disagrees on attainability");
      if (std::isfinite(bounds[k]) && std::fabs(bounds[k] - fine[k]) > 5e-4)
        fail(Err::quadrature, "boundary self-test exceeds 5e-4 at doubled resolution");
    }
  }
  return bounds;
}

MonitorResult monitor_trial(const TrialData& data, const MonitoringPlan& plan, double null_beta) {
  plan.validate();
  if (data.covariate_dim() > 1) fail(Err::dimension, "monitoring requires d == 1");
  const double planned = plan.planned_information;
  const bool two = plan.sidedness == Sidedness::two;

  std::vector<double> event_times;
  for (const Subject& s : data.subjects)
    if (s.event_indicator == 1) event_times.push_back(s.completion_time());
  std::sort(event_times.begin(), event_times.end());

  CoxEval eval(data, {null_beta});
  const auto spent = [&](double v) { return total_spending(plan, v); };

  MonitorResult res;
  BoundaryRecursion rec(two, 4001, 8.0);
  size_t next_event = 0;
  double last_fraction = 0.0;
  double last_sigma = kNaN;
  double last_z = kNaN;
  double spent_prev = 0.0;
  bool any_attained = false;

  for (size_t k = 0; k < plan.v_grid.size(); ++k) {
    const double v_planned = plan.v_grid[k];

    // One information jump can overshoot several planned fractions; the
    // later looks coincide with the previous analysis time and can spend
    // nothing new, so the statistic faces an unreachable boundary.
    if (any_attained && last_fraction >= v_planned) {
      res.sigma_hat.push_back(last_sigma);
      res.decisions.push_back({static_cast<int>(k) + 1, last_fraction, last_z, kInf,
                               LookAction::continue_});
      continue;
    }

    bool crossed = false;
    double sig = kNaN;
    while (next_event < event_times.size()) {
      const double t = event_times[next_event];
      const double frac = eval.vhat_scalar(t) / planned;
      res.last_event_index_used = static_cast<int>(next_event);
      ++next_event;
      if (frac >= v_planned) {
        crossed = true;
        last_fraction = frac;
        sig = t;
        break;
      }
    }

    if (!crossed) {
      res.decisions.push_back({static_cast<int>(k) + 1, v_planned, kNaN, kNaN,
                               LookAction::accept_fail_to_reach});
      continue;
    }

    any_attained = true;
    res.sigma_hat.push_back(sig);
    last_sigma = sig;

    const double spent_now = spent(last_fraction);
    const double b = rec.step(last_fraction, std::max(0.0, spent_now - spent_prev));
    spent_prev = spent_now;
    const double c = std::isfinite(b) ? b / std::sqrt(last_fraction) : kInf;

    const double z = eval.score_scalar(sig) / std::sqrt(planned) / std::sqrt(last_fraction);
    last_z = z;
    const bool reject = two ? std::fabs(z) >= c : z >= c;
    res.decisions.push_back({static_cast<int>(k) + 1, last_fraction, z, c,
                             reject ? LookAction::reject : LookAction::continue_});
    if (reject) {
      res.rejected = true;
      res.rejected_look = static_cast<int>(k) + 1;
      break;
    }
  }
  return res;
}

}  // namespace adaptsurv
