#include "adaptsurv.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "mple.hpp"
#include "runner.hpp"
#include "serialize.hpp"
#include "validate.hpp"

struct as_config {
  adaptsurv::ParsedConfig cfg;
};

struct as_trial {
  adaptsurv::SimOutcome outcome;
  bool has_log = false;
};

namespace {

thread_local std::string g_last_error;

as_status status_of(adaptsurv::Err code) {
  using adaptsurv::Err;
  switch (code) {
    case Err::parse: return AS_ERR_PARSE;
    case Err::validation: return AS_ERR_VALIDATION;
    case Err::io: return AS_ERR_IO;
    case Err::schedule_exceeds_horizon: return AS_ERR_SCHEDULE_EXCEEDS_HORIZON;
    case Err::allocation_history: return AS_ERR_ALLOCATION_HISTORY;
    case Err::empty_risk_set: return AS_ERR_EMPTY_RISK_SET;
    case Err::information_not_reached: return AS_ERR_INFORMATION_NOT_REACHED;
    case Err::no_events: return AS_ERR_NO_EVENTS;
    case Err::singular_information: return AS_ERR_SINGULAR_INFORMATION;
    case Err::not_converged: return AS_ERR_NOT_CONVERGED;
    case Err::minimum_information: return AS_ERR_MINIMUM_INFORMATION;
    case Err::quadrature: return AS_ERR_QUADRATURE;
    case Err::insufficient_replicates: return AS_ERR_INSUFFICIENT_REPLICATES;
    case Err::dimension: return AS_ERR_DIMENSION;
    case Err::usage: return AS_ERR_USAGE;
    case Err::internal: return AS_ERR_INTERNAL;
  }
  return AS_ERR_INTERNAL;
}

template <typename Fn>
as_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AS_OK;
  } catch (const adaptsurv::Error& e) {
    g_last_error = e.what();
    return status_of(e.code);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AS_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

as_status require(bool ok, const char* msg) {
  if (ok) return AS_OK;
  g_last_error = msg;
  return AS_ERR_USAGE;
}

}  // namespace

extern "C" {

const char* as_version(void) { return "0.1.0"; }

const char* as_status_name(as_status s) {
  switch (s) {
    case AS_OK: return "AS_OK";
    case AS_ERR_PARSE: return "AS_ERR_PARSE";
    case AS_ERR_VALIDATION: return "AS_ERR_VALIDATION";
    case AS_ERR_IO: return "AS_ERR_IO";
    case AS_ERR_SCHEDULE_EXCEEDS_HORIZON: return "AS_ERR_SCHEDULE_EXCEEDS_HORIZON";
    case AS_ERR_ALLOCATION_HISTORY: return "AS_ERR_ALLOCATION_HISTORY";
    case AS_ERR_EMPTY_RISK_SET: return "AS_ERR_EMPTY_RISK_SET";
    case AS_ERR_INFORMATION_NOT_REACHED: return "AS_ERR_INFORMATION_NOT_REACHED";
    case AS_ERR_NO_EVENTS: return "AS_ERR_NO_EVENTS";
    case AS_ERR_SINGULAR_INFORMATION: return "AS_ERR_SINGULAR_INFORMATION";
    case AS_ERR_NOT_CONVERGED: return "AS_ERR_NOT_CONVERGED";
    case AS_ERR_MINIMUM_INFORMATION: return "AS_ERR_MINIMUM_INFORMATION";
    case AS_ERR_QUADRATURE: return "AS_ERR_QUADRATURE";
    case AS_ERR_INSUFFICIENT_REPLICATES: return "AS_ERR_INSUFFICIENT_REPLICATES";
    case AS_ERR_DIMENSION: return "AS_ERR_DIMENSION";
    case AS_ERR_USAGE: return "AS_ERR_USAGE";
    case AS_ERR_INTERNAL: return "AS_ERR_INTERNAL";
  }
  return "AS_ERR_INTERNAL";
}

const char* as_last_error(void) { return g_last_error.c_str(); }

void as_string_free(char* s) { std::free(s); }

as_status as_config_parse(const char* text, as_config** out) {
  if (as_status st = require(text && out, "null argument")) return st;
  return wrap([&] {
    auto* c = new as_config{adaptsurv::parse_config(text)};
    *out = c;
  });
}

void as_config_free(as_config* c) { delete c; }

as_status as_config_seed(const as_config* c, uint64_t* out) {
  if (as_status st = require(c && out, "null argument")) return st;
  *out = c->cfg.design.seed;
  return AS_OK;
}

as_status as_simulate(const as_config* c, as_trial** out) {
  if (as_status st = require(c && out, "null argument")) return st;
  return as_simulate_seeded(c, c->cfg.design.seed, out);
}

as_status as_simulate_seeded(const as_config* c, uint64_t seed, as_trial** out) {
  if (as_status st = require(c && out, "null argument")) return st;
  return wrap([&] {
    if (!c->cfg.has_design)
      adaptsurv::fail(adaptsurv::Err::validation, "config has no [design] section");
    auto* t = new as_trial{adaptsurv::simulate_trial(c->cfg.design, seed), true};
    *out = t;
  });
}

void as_trial_free(as_trial* t) { delete t; }

as_status as_trial_from_csv(const char* csv_text, as_trial** out) {
  if (as_status st = require(csv_text && out, "null argument")) return st;
  return wrap([&] {
    auto* t = new as_trial{};
    try {
      t->outcome.trial = adaptsurv::trial_from_csv(csv_text);
    } catch (...) {
      delete t;
      throw;
    }
    *out = t;
  });
}

as_status as_trial_to_csv(const as_trial* t, char** out_csv) {
  if (as_status st = require(t && out_csv, "null argument")) return st;
  return wrap([&] { *out_csv = dup_string(adaptsurv::trial_to_csv(t->outcome.trial)); });
}

as_status as_trial_allocation_log_csv(const as_trial* t, char** out_csv) {
  if (as_status st = require(t && out_csv, "null argument")) return st;
  return wrap([&] {
    if (!t->has_log)
      adaptsurv::fail(adaptsurv::Err::validation, "trial was ingested; no allocation log");
    *out_csv = dup_string(adaptsurv::allocation_log_to_csv(t->outcome));
  });
}

as_status as_trial_subject_count(const as_trial* t, int* out) {
  if (as_status st = require(t && out, "null argument")) return st;
  *out = t->outcome.trial.n();
  return AS_OK;
}

as_status as_trial_covariate_dim(const as_trial* t, int* out) {
  if (as_status st = require(t && out, "null argument")) return st;
  *out = t->outcome.trial.covariate_dim();
  return AS_OK;
}

as_status as_score(const as_trial* t, const double* beta, int dim, double time,
                   double entry_cutoff, int variant, char** out_json) {
  if (as_status st = require(t && beta && out_json && dim >= 1, "bad argument")) return st;
  return wrap([&] {
    const adaptsurv::ScoreVariant v = variant == AS_VARIANT_FULL_RISKSET
                                          ? adaptsurv::ScoreVariant::full_riskset
                                          : adaptsurv::ScoreVariant::subsample_riskset;
    const adaptsurv::ScoreEvaluation ev = adaptsurv::score(
        t->outcome.trial, std::vector<double>(beta, beta + dim), time, entry_cutoff, v);
    *out_json = dup_string(adaptsurv::score_to_json(ev, v));
  });
}

as_status as_estimate(const as_trial* t, double time, double entry_cutoff, const double* init,
                      int dim, double tol, int max_iter, char** out_json) {
  if (as_status st = require(t && out_json && dim >= 1, "bad argument")) return st;
  return wrap([&] {
    adaptsurv::MpleOptions opt;
    if (tol > 0) opt.tol = tol;
    if (max_iter > 0) opt.max_iter = max_iter;
    std::vector<double> start(dim, 0.0);
    if (init != nullptr) start.assign(init, init + dim);
    const adaptsurv::MpleResult res =
        adaptsurv::solve_mple(t->outcome.trial, time, entry_cutoff, start, opt);
    *out_json = dup_string(adaptsurv::mple_to_json(res));
  });
}

as_status as_estimate_at_fraction(const as_trial* t, double fraction, double planned_information,
                                  double ref_beta, double tol, int max_iter, char** out_json) {
  if (as_status st = require(t && out_json, "bad argument")) return st;
  return wrap([&] {
    adaptsurv::MpleOptions opt;
    if (tol > 0) opt.tol = tol;
    if (max_iter > 0) opt.max_iter = max_iter;
    const adaptsurv::MpleResult res = adaptsurv::solve_mple_at_fraction(
        t->outcome.trial, fraction, planned_information, ref_beta, 0.0, opt);
    *out_json = dup_string(adaptsurv::mple_to_json(res));
  });
}

as_status as_boundaries(double alpha, int looks, int spending, int two_sided, char** out_csv) {
  if (as_status st = require(out_csv && looks >= 1, "bad argument")) return st;
  return wrap([&] {
    adaptsurv::MonitoringPlan plan;
    plan.alpha = alpha;
    plan.planned_information = 1.0;
    for (int k = 1; k <= looks; ++k)
      plan.v_grid.push_back(static_cast<double>(k) / static_cast<double>(looks));
    switch (spending) {
      case AS_SPENDING_OBRIEN_FLEMING:
        plan.spending = adaptsurv::Spending::obrien_fleming_type;
        break;
      case AS_SPENDING_POCOCK: plan.spending = adaptsurv::Spending::pocock_type; break;
      case AS_SPENDING_LINEAR: plan.spending = adaptsurv::Spending::linear; break;
      default: adaptsurv::fail(adaptsurv::Err::usage, "unknown spending id");
    }
    plan.sidedness = two_sided ? adaptsurv::Sidedness::two : adaptsurv::Sidedness::one;
    const std::vector<double> bounds = adaptsurv::compute_boundaries(plan);
    *out_csv = dup_string(adaptsurv::boundaries_to_csv(plan, bounds));
  });
}

as_status as_monitor(const as_trial* t, const as_config* plan, char** out_csv) {
  if (as_status st = require(t && plan && out_csv, "null argument")) return st;
  return wrap([&] {
    if (!plan->cfg.has_monitoring)
      adaptsurv::fail(adaptsurv::Err::validation, "config has no [monitoring] section");
    adaptsurv::MonitoringPlan p = plan->cfg.plan;
    if (!(p.planned_information > 0.0))
      p.planned_information = static_cast<double>(t->outcome.trial.n());
    const adaptsurv::MonitorResult res =
        adaptsurv::monitor_trial(t->outcome.trial, p, p.null_beta);
    *out_csv = dup_string(adaptsurv::monitor_to_csv(res));
  });
}

as_status as_validate(const as_config* c, int replicates, int threads, char** out_json) {
  if (as_status st = require(c && out_json, "null argument")) return st;
  return wrap([&] {
    if (!c->cfg.has_design)
      adaptsurv::fail(adaptsurv::Err::validation, "config has no [design] section");
    adaptsurv::ValidationGrids grids;
    grids.v_grid = c->cfg.v_grid;
    grids.t_grid = c->cfg.t_grid;
    grids.theta_grid = c->cfg.theta_grid;
    grids.est_v_grid = c->cfg.est_v_grid;
    grids.with_estimation = c->cfg.design.dim() == 1;
    if (c->cfg.has_monitoring) {
      grids.with_monitoring = true;
      grids.plan = c->cfg.plan;
      if (!(grids.plan.planned_information > 0.0))
        grids.plan.planned_information = c->cfg.design.planned_information;
    }
    const int R = replicates > 0 ? replicates : c->cfg.replicates;
    adaptsurv::DiagnosticsReport report;
    report.oracle_max_error = adaptsurv::oracle_equivalence_sweep(c->cfg.design.seed, 100, 50);
    const adaptsurv::ReplicateSet set =
        adaptsurv::run_replicates(c->cfg.design, R, grids, threads);
    if (!grids.v_grid.empty()) adaptsurv::brownian_diagnostics(set, report);
    if (!grids.t_grid.empty() && !grids.theta_grid.empty())
      adaptsurv::field_diagnostics(set, report);
    report.replicates = R;
    *out_json = dup_string(adaptsurv::diagnostics_to_json(report));
  });
}

int as_run(int argc, const char* const* argv) { return adaptsurv::run_cli(argc, argv); }

}  // extern "C"
