#include "mple.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "info_time.hpp"
#include "stats.hpp"

namespace adaptsurv {

namespace {

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

Eigen::MatrixXd as_matrix(const std::vector<double>& flat, int d) {
  Eigen::MatrixXd m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = flat[r * d + c];
  return m;
}

std::vector<double> as_flat(const Eigen::MatrixXd& m) {
  std::vector<double> flat(static_cast<size_t>(m.rows()) * m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) flat[r * m.cols() + c] = m(r, c);
  return flat;
}

}  // namespace

MpleResult solve_mple(const TrialData& data, double t, double theta,
                      const std::vector<double>& init, const MpleOptions& opt) {
  const int d = data.covariate_dim();
  if (d < 1) fail(Err::no_events, "trial has no subjects");
  if (static_cast<int>(init.size()) != d) fail(Err::dimension, "init has wrong dimension");

  std::vector<double> beta = init;
  ScoreEvaluation ev = score(data, beta, t, theta, ScoreVariant::subsample_riskset);
  if (ev.n_events_used == 0) fail(Err::no_events, "no usable events by (t, theta)");

  MpleResult res;
  res.n_events = ev.n_events_used;
  bool diverged = false;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    if (sup_norm(ev.score) < opt.tol) break;
    Eigen::MatrixXd info = as_matrix(ev.information, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > opt.max_condition)
      fail(Err::singular_information, "information matrix is singular or badly conditioned");
    Eigen::VectorXd u(d);
    for (int k = 0; k < d; ++k) u(k) = ev.score[k];
    Eigen::VectorXd step = info.ldlt().solve(u);

    // Step-halving until the log partial likelihood does not decrease.
    // The slack absorbs summation roundoff near the optimum, where a full
    // Newton step moves the likelihood by less than the evaluation noise.
    const double slack = 1e-10 * (1.0 + std::fabs(ev.loglik));
    double scale = 1.0;
    ScoreEvaluation next;
    std::vector<double> cand(d);
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      for (int k = 0; k < d; ++k) cand[k] = beta[k] + scale * step(k);
      next = score(data, cand, t, theta, ScoreVariant::subsample_riskset);
      if (next.loglik >= ev.loglik - slack) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // ascent stalled; report non-convergence below
    beta = cand;
    ev = std::move(next);
    if (sup_norm(beta) > opt.divergence_bound) {
      diverged = true;
      break;
    }
  }

  res.beta_hat = beta;
  res.iterations = iter;
  res.final_score_norm = sup_norm(ev.score);
  res.loglik = ev.loglik;
  res.information_at_hat = ev.information;
  res.vhat_at_hat = ev.vhat;

  const double n = static_cast<double>(data.n());
  Eigen::MatrixXd info = as_matrix(ev.information, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();

  // A flat likelihood at a large estimate is the monotone-likelihood
  // boundary: the score decays to zero exponentially, so |beta| alone can
  // sit below the hard bound while the information has already collapsed.
  if (!diverged && lo / n < opt.min_information_floor && sup_norm(beta) > 10.0) diverged = true;
  res.diverged = diverged;
  res.converged = !diverged && res.final_score_norm < opt.tol;
  if (diverged) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.covariance.assign(static_cast<size_t>(d) * d, nan);
    res.covariance_sandwich.assign(static_cast<size_t>(d) * d, nan);
    res.ci_95.assign(d, {nan, nan});
    return res;
  }
  if (!(lo > 0.0) || hi / lo > opt.max_condition)
    fail(Err::singular_information, "information matrix is singular at the estimate");
  if (lo / n < opt.min_information_floor)
    fail(Err::minimum_information, "information per subject below the configured floor");

  const Eigen::MatrixXd inv = info.inverse();
  res.covariance = as_flat(n * inv);
  res.covariance_sandwich = as_flat(n * (inv * as_matrix(ev.vhat, d) * inv));
  const double zq = norm_quantile(0.975);
  res.ci_95.resize(d);
  for (int k = 0; k < d; ++k) {
    const double se = std::sqrt(inv(k, k));
    res.ci_95[k] = {beta[k] - zq * se, beta[k] + zq * se};
  }
  return res;
}

MpleResult solve_mple_at_fraction(const TrialData& data, double v, double planned,
                                  double ref_beta, double init, const MpleOptions& opt) {
  const InformationPath path = information_path(data, ref_beta, planned);
  const double sig = sigma_hat(path, v);  // throws information_not_reached
  return solve_mple(data, sig, sig, {init}, opt);
}

}  // namespace adaptsurv
