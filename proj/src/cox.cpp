#include "cox.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace adaptsurv {

CoxEval::CoxEval(const TrialData& data, std::vector<double> beta)
    : data_(&data), beta_(std::move(beta)) {
  n_ = data.n();
  dim_ = data.covariate_dim();
  if (n_ > 0 && static_cast<int>(beta_.size()) != dim_)
    fail(Err::dimension, "beta dimension differs from trial covariates");
  entry_.resize(n_);
  obs_.resize(n_);
  constant_.resize(n_);
  const_z_.assign(static_cast<size_t>(n_) * dim_, 0.0);
  const_weight_.assign(n_, 0.0);
  const_eta_.assign(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    const Subject& s = data.subjects[i];
    entry_[i] = s.entry_time;
    obs_[i] = s.observed_time;
    constant_[i] = s.covariates.is_constant() ? 1 : 0;
    if (constant_[i]) {
      double eta = 0.0;
      for (int k = 0; k < dim_; ++k) {
        const double z = s.covariates.values[k];
        const_z_[static_cast<size_t>(i) * dim_ + k] = z;
        eta += beta_[k] * z;
      }
      const_eta_[i] = eta;
      const_weight_[i] = std::exp(eta);
    }
    if (s.event_indicator == 1) events_.push_back(i);
  }
  std::sort(events_.begin(), events_.end(), [&](int a, int b) {
    const double ca = data.subjects[a].completion_time();
    const double cb = data.subjects[b].completion_time();
    return ca != cb ? ca < cb : a < b;
  });
  event_completion_.reserve(events_.size());
  for (int e : events_) event_completion_.push_back(data.subjects[e].completion_time());
}

int CoxEval::prefix(double cutoff) const {
  return static_cast<int>(std::upper_bound(entry_.begin(), entry_.end(), cutoff) -
                          entry_.begin());
}

void CoxEval::gamma1(double cutoff, double w, double& g0, double& g1, double& g2,
                     int force_include) const {
  g0 = g1 = g2 = 0.0;
  int m = prefix(cutoff);
  const double b0 = beta_[0];
  for (int i = 0; i < m; ++i) {
    if (obs_[i] < w) continue;
    double z, we;
    if (constant_[i]) {
      z = const_z_[i];
      we = const_weight_[i];
    } else {
      z = data_->subjects[i].covariates.at1(w);
      we = std::exp(b0 * z);
    }
    g0 += we;
    g1 += z * we;
    g2 += z * z * we;
  }
  if (force_include >= m && obs_[force_include] >= w) {
    const int i = force_include;
    const double z = constant_[i] ? const_z_[i] : data_->subjects[i].covariates.at1(w);
    const double we = constant_[i] ? const_weight_[i] : std::exp(b0 * z);
    g0 += we;
    g1 += z * we;
    g2 += z * z * we;
  }
}

double CoxEval::gamma(double cutoff, double w, double* g1, double* g2, int force_include) const {
  const int d = dim_;
  double g0 = 0.0;
  if (g1) std::fill(g1, g1 + d, 0.0);
  if (g2) std::fill(g2, g2 + d * d, 0.0);
  const int m = prefix(cutoff);
  const auto accumulate = [&](int i) {
    const double* z;
    double we;
    if (constant_[i]) {
      z = const_z_.data() + static_cast<size_t>(i) * d;
      we = const_weight_[i];
    } else {
      z = data_->subjects[i].covariates.at(w);
      double eta = 0.0;
      for (int k = 0; k < d; ++k) eta += beta_[k] * z[k];
      we = std::exp(eta);
    }
    g0 += we;
    if (g1)
      for (int k = 0; k < d; ++k) g1[k] += z[k] * we;
    if (g2)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) g2[r * d + c] += z[r] * z[c] * we;
  };
  for (int i = 0; i < m; ++i) {
    if (obs_[i] < w) continue;
    accumulate(i);
  }
  if (force_include >= m && obs_[force_include] >= w) accumulate(force_include);
  return g0;
}

ScoreEvaluation CoxEval::score(double t, double theta, ScoreVariant variant) const {
  const int d = dim_;
  ScoreEvaluation ev;
  ev.beta = beta_;
  ev.t = t;
  ev.theta = theta;
  ev.score.assign(d, 0.0);
  ev.information.assign(static_cast<size_t>(d) * d, 0.0);
  ev.vhat.assign(static_cast<size_t>(d) * d, 0.0);

  std::vector<double> g1(d), g2(static_cast<size_t>(d) * d), zb(d), resid(d);
  for (size_t idx = 0; idx < events_.size(); ++idx) {
    if (event_completion_[idx] > t) break;
    const int i = events_[idx];
    if (entry_[i] > theta) continue;
    const double w = obs_[i];
    const double cutoff =
        variant == ScoreVariant::full_riskset ? t - w : std::min(theta, t - w);
    const double g0 = gamma(cutoff, w, g1.data(), g2.data(), i);
    if (!(g0 > 0.0)) fail(Err::empty_risk_set, "no subjects at risk for an observed event");
    const double* z;
    double eta;
    if (constant_[i]) {
      z = const_z_.data() + static_cast<size_t>(i) * d;
      eta = const_eta_[i];
    } else {
      z = data_->subjects[i].covariates.at(w);
      eta = 0.0;
      for (int k = 0; k < d; ++k) eta += beta_[k] * z[k];
    }
    for (int k = 0; k < d; ++k) {
      zb[k] = g1[k] / g0;
      resid[k] = z[k] - zb[k];
      ev.score[k] += resid[k];
    }
    ev.loglik += eta - std::log(g0);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        ev.information[r * d + c] += g2[r * d + c] / g0 - zb[r] * zb[c];
        ev.vhat[r * d + c] += resid[r] * resid[c];
      }
    ++ev.n_events_used;
  }
  return ev;
}

double CoxEval::score_scalar(double t) const {
  if (dim_ != 1) fail(Err::dimension, "scalar score path requires d == 1");
  double u = 0.0;
  for (size_t idx = 0; idx < events_.size(); ++idx) {
    if (event_completion_[idx] > t) break;
    const int i = events_[idx];
    const double w = obs_[i];
    double g0, g1, g2;
    gamma1(t - w, w, g0, g1, g2, i);
    const double z = constant_[i] ? const_z_[i] : data_->subjects[i].covariates.at1(w);
    u += z - g1 / g0;
  }
  return u;
}

double CoxEval::vhat_scalar(double t) const {
  if (dim_ != 1) fail(Err::dimension, "scalar information path requires d == 1");
  double v = 0.0;
  for (size_t idx = 0; idx < events_.size(); ++idx) {
    if (event_completion_[idx] > t) break;
    const int i = events_[idx];
    const double w = obs_[i];
    double g0, g1, g2;
    gamma1(t - w, w, g0, g1, g2, i);
    const double z = constant_[i] ? const_z_[i] : data_->subjects[i].covariates.at1(w);
    const double r = z - g1 / g0;
    v += r * r;
  }
  return v;
}

std::vector<double> gamma_k(const TrialData& data, const std::vector<double>& beta, double theta,
                            double w, int k) {
  if (k < 0 || k > 2) fail(Err::validation, "gamma_k supports k in {0,1,2}");
  CoxEval eval(data, beta);
  const int d = eval.dim();
  std::vector<double> g1(d), g2(static_cast<size_t>(d) * d);
  const double g0 = eval.gamma(theta, w, g1.data(), g2.data());
  if (k == 0) return {g0};
  if (k == 1) return g1;
  return g2;
}

std::vector<double> zbar(const TrialData& data, const std::vector<double>& beta, double t,
                         double w, ScoreVariant variant, double theta) {
  CoxEval eval(data, beta);
  const int d = eval.dim();
  const double cutoff =
      variant == ScoreVariant::full_riskset ? t - w : std::min(theta, t - w);
  std::vector<double> g1(d);
  const double g0 = eval.gamma(cutoff, w, g1.data(), nullptr);
  if (!(g0 > 0.0)) fail(Err::empty_risk_set, "risk set empty at the queried (t, w)");
  for (double& v : g1) v /= g0;
  return g1;
}

ScoreEvaluation score(const TrialData& data, const std::vector<double>& beta, double t,
                      double theta, ScoreVariant variant) {
  return CoxEval(data, beta).score(t, theta, variant);
}

double score_gradient_check(const TrialData& data, const std::vector<double>& beta, double t,
                            double theta, ScoreVariant variant, double h) {
  if (!(h > 0.0)) fail(Err::validation, "step size must be > 0");
  const int d = data.covariate_dim();
  const ScoreEvaluation at = score(data, beta, t, theta, variant);
  double worst = 0.0;
  const auto rel = [](double got, double want) {
    return std::fabs(got - want) / std::max(1.0, std::fabs(want));
  };
  for (int j = 0; j < d; ++j) {
    std::vector<double> bp = beta, bm = beta;
    bp[j] += h;
    bm[j] -= h;
    const ScoreEvaluation up = score(data, bp, t, theta, variant);
    const ScoreEvaluation dn = score(data, bm, t, theta, variant);
    worst = std::max(worst, rel((up.loglik - dn.loglik) / (2.0 * h), at.score[j]));
    for (int r = 0; r < d; ++r) {
      const double dscore = (up.score[r] - dn.score[r]) / (2.0 * h);
      worst = std::max(worst, rel(dscore, -at.information[r * d + j]));
    }
  }
  return worst;
}

}  // namespace adaptsurv
