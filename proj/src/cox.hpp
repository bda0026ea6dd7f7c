#pragma once

#include <vector>

#include "trial.hpp"

namespace adaptsurv {

// Which entry cutoff feeds the risk-set average in two-parameter evaluations.
// full_riskset uses everyone entered by t - w; subsample_riskset restricts to
// entries by min(theta, t - w). The two coincide at theta == t.
enum class ScoreVariant { full_riskset, subsample_riskset };

struct ScoreEvaluation {
  std::vector<double> beta;
  double t = 0.0;
  double theta = 0.0;
  std::vector<double> score;        // d
  double loglik = 0.0;
  std::vector<double> information;  // d x d row-major, minus d(score)/d(beta)
  std::vector<double> vhat;         // d x d row-major, sum of outer products
  int n_events_used = 0;
};

// Prepared evaluation context over a fixed (trial, beta). Subjects are held
// in entry order so every entry cutoff is a prefix; subjects with constant
// covariates get their risk weight exp(beta'Z) cached once.
class CoxEval {
 public:
  CoxEval(const TrialData& data, std::vector<double> beta);

  int dim() const { return dim_; }
  int n() const { return n_; }
  const TrialData& data() const { return *data_; }
  const std::vector<double>& beta() const { return beta_; }

  // Gamma_k(beta; cutoff, w) for k = 0,1,2. g1 (length d) and g2 (length d*d)
  // may be null when not needed; returns Gamma_0. When evaluated at an
  // event's own time the cutoff t - w equals the subject's entry only up to
  // one rounding step, so the event subject can be pinned into the risk set
  // via force_include.
  double gamma(double cutoff, double w, double* g1, double* g2, int force_include = -1) const;

  ScoreEvaluation score(double t, double theta, ScoreVariant variant) const;

  // d == 1 conveniences for the information-time path.
  double score_scalar(double t) const;      // U(beta; t, t)
  double vhat_scalar(double t) const;       // Vhat_{t,t}

 private:
  void gamma1(double cutoff, double w, double& g0, double& g1, double& g2,
              int force_include = -1) const;
  int prefix(double cutoff) const;

  const TrialData* data_;
  std::vector<double> beta_;
  int n_ = 0;
  int dim_ = 0;
  std::vector<double> entry_, obs_;
  std::vector<uint8_t> constant_;
  std::vector<double> const_z_;       // n * d, defined for constant paths
  std::vector<double> const_weight_;  // exp(beta'Z) for constant paths
  std::vector<double> const_eta_;
  std::vector<int> events_;           // subject indices, delta == 1, completion-sorted
  std::vector<double> event_completion_;
};

// k-th weighted risk-set moment; returns scalar (k=0), d vector (k=1) or
// d*d row-major matrix (k=2), flattened.
std::vector<double> gamma_k(const TrialData& data, const std::vector<double>& beta, double theta,
                            double w, int k);
std::vector<double> zbar(const TrialData& data, const std::vector<double>& beta, double t,
                         double w, ScoreVariant variant, double theta);
ScoreEvaluation score(const TrialData& data, const std::vector<double>& beta, double t,
                      double theta, ScoreVariant variant);
// Worst relative error of central-difference checks: d(loglik) vs score and
// d(score) vs -information.
double score_gradient_check(const TrialData& data, const std::vector<double>& beta, double t,
                            double theta, ScoreVariant variant, double h);

}  // namespace adaptsurv
