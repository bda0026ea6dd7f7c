#include "runner.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "mple.hpp"
#include "serialize.hpp"
#include "validate.hpp"

namespace adaptsurv {

namespace {

uint64_t effective_seed(uint64_t config_seed) {
  const char* env = std::getenv("ADAPTSURV_SEED");
  if (env == nullptr || *env == '\0') return config_seed;
  return std::strtoull(env, nullptr, 10);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    const std::string item = s.substr(start, comma - start);
    if (!item.empty()) out.push_back(parse_double(item));
    if (comma == s.size()) break;
    start = comma + 1;
  }
  if (out.empty()) fail(Err::usage, "empty numeric list");
  return out;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& content) {
  write_file_atomic((std::filesystem::path(out_dir) / name).string(), content);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const std::string text = read_file(config_path);
  ParsedConfig cfg = parse_config(text);
  if (!cfg.has_design) fail(Err::validation, "simulate needs a [design] section");
  cfg.design.seed = effective_seed(cfg.design.seed);
  ManifestWriter manifest = ManifestWriter::begin(out_dir, cfg.design.seed, text);
  const SimOutcome outcome = simulate_trial(cfg.design);
  if (outcome.trial.has_tied_event_times())
    std::cerr << "warning: tied event times present; shared risk sets apply\n";
  emit(out_dir, "trial.csv", trial_to_csv(outcome.trial));
  emit(out_dir, "allocation_log.csv", allocation_log_to_csv(outcome));
  manifest.finalize({"trial.csv", "allocation_log.csv"});
  std::cout << "simulate: " << outcome.trial.n() << " subjects -> " << out_dir << "\n";
  return 0;
}

int cmd_score(const std::string& trial_path, const std::string& beta_list, double t,
              std::optional<double> theta, const std::string& variant_name,
              const std::string& out_dir) {
  const std::string csv = read_file(trial_path);
  const TrialData trial = trial_from_csv(csv);
  if (trial.has_tied_event_times())
    std::cerr << "warning: tied event times present; shared risk sets apply\n";
  const std::vector<double> beta = parse_double_list(beta_list);
  ScoreVariant variant;
  if (variant_name == "full") variant = ScoreVariant::full_riskset;
  else if (variant_name == "subsample") variant = ScoreVariant::subsample_riskset;
  else fail(Err::usage, "--variant must be 'full' or 'subsample'");
  const double th = theta.value_or(t);
  if (!(th <= t)) fail(Err::validation, "theta must not exceed t");
  ManifestWriter manifest = ManifestWriter::begin(out_dir, 0, csv);
  const ScoreEvaluation ev = score(trial, beta, t, th, variant);
  emit(out_dir, "score.json", score_to_json(ev, variant));
  manifest.finalize({"score.json"});
  std::cout << "score: " << ev.n_events_used << " events used -> " << out_dir << "\n";
  return 0;
}

int cmd_estimate(const std::string& trial_path, std::optional<double> t,
                 std::optional<double> theta, std::optional<double> fraction,
                 std::optional<double> planned, double ref_beta, const std::string& init_list,
                 double tol, int max_iter, const std::string& out_dir) {
  const std::string csv = read_file(trial_path);
  const TrialData trial = trial_from_csv(csv);
  MpleOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  ManifestWriter manifest = ManifestWriter::begin(out_dir, 0, csv);
  MpleResult res;
  if (fraction) {
    const double vn = planned.value_or(static_cast<double>(trial.n()));
    res = solve_mple_at_fraction(trial, *fraction, vn, ref_beta, 0.0, opt);
  } else {
    const double tt = t.value_or(trial.horizon);
    if (!std::isfinite(tt))
      fail(Err::validation, "trial has no finite horizon; pass --t explicitly");
    const double th = theta.value_or(tt);
    std::vector<double> init(trial.covariate_dim(), 0.0);
    if (!init_list.empty()) init = parse_double_list(init_list);
    res = solve_mple(trial, tt, th, init, opt);
  }
  emit(out_dir, "estimate.json", mple_to_json(res));
  manifest.finalize({"estimate.json"});
  std::cout << "estimate: beta_hat[0] = " << format_double(res.beta_hat[0])
            << (res.converged ? "" : " (not converged)") << " -> " << out_dir << "\n";
  return res.converged ? 0 : 1;
}

int cmd_boundaries(double alpha, int looks, const std::string& spending_name,
                   const std::string& sided, const std::string& out_dir) {
  MonitoringPlan plan;
  plan.alpha = alpha;
  if (looks < 1) fail(Err::usage, "--looks must be >= 1");
  for (int k = 1; k <= looks; ++k)
    plan.v_grid.push_back(static_cast<double>(k) / static_cast<double>(looks));
  if (spending_name == "obrien_fleming_type") plan.spending = Spending::obrien_fleming_type;
  else if (spending_name == "pocock_type") plan.spending = Spending::pocock_type;
  else if (spending_name == "linear") plan.spending = Spending::linear;
  else fail(Err::usage, "--spending must be obrien_fleming_type, pocock_type or linear");
  if (sided == "one") plan.sidedness = Sidedness::one;
  else if (sided == "two") plan.sidedness = Sidedness::two;
  else fail(Err::usage, "--sided must be 'one' or 'two'");
  plan.planned_information = 1.0;  // boundaries depend only on fractions
  ManifestWriter manifest = ManifestWriter::begin(out_dir, 0, "boundaries");
  const std::vector<double> bounds = compute_boundaries(plan);
  emit(out_dir, "boundaries.csv", boundaries_to_csv(plan, bounds));
  manifest.finalize({"boundaries.csv"});
  std::cout << "boundaries: " << looks << " looks -> " << out_dir << "\n";
  return 0;
}

int cmd_monitor(const std::string& trial_path, const std::string& plan_path,
                const std::string& out_dir) {
  const std::string csv = read_file(trial_path);
  const std::string plan_text = read_file(plan_path);
  const TrialData trial = trial_from_csv(csv);
  ParsedConfig cfg = parse_config(plan_text);
  if (!cfg.has_monitoring) fail(Err::validation, "monitor needs a [monitoring] section");
  MonitoringPlan plan = cfg.plan;
  if (!(plan.planned_information > 0.0))
    plan.planned_information = static_cast<double>(trial.n());
  ManifestWriter manifest = ManifestWriter::begin(out_dir, 0, plan_text + csv);
  const MonitorResult res = monitor_trial(trial, plan, plan.null_beta);
  emit(out_dir, "monitor.csv", monitor_to_csv(res));
  // Companion view: the rescaled score at the planned fractions.
  const RescaledPath path =
      bhat_path(trial, plan.null_beta, plan.v_grid, plan.planned_information);
  emit(out_dir, "rescaled.csv", rescaled_to_csv(path));
  manifest.finalize({"monitor.csv", "rescaled.csv"});
  std::cout << "monitor: " << (res.rejected ? "reject at look " + std::to_string(res.rejected_look)
                                            : std::string("no rejection"))
            << " -> " << out_dir << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path, std::optional<int> replicates,
                 std::optional<int> threads, const std::string& out_dir) {
  const std::string text = read_file(config_path);
  ParsedConfig cfg = parse_config(text);
  if (!cfg.has_design) fail(Err::validation, "validate needs a [design] section");
  cfg.design.seed = effective_seed(cfg.design.seed);
  const int R = replicates.value_or(cfg.replicates);
  const int workers = threads.value_or(cfg.threads);

  ManifestWriter manifest = ManifestWriter::begin(out_dir, cfg.design.seed, text);

  ValidationGrids grids;
  grids.v_grid = cfg.v_grid;
  grids.t_grid = cfg.t_grid;
  grids.theta_grid = cfg.theta_grid;
  grids.est_v_grid = cfg.est_v_grid;
  grids.with_estimation = cfg.design.dim() == 1;
  if (cfg.has_monitoring) {
    grids.with_monitoring = true;
    grids.plan = cfg.plan;
    if (!(grids.plan.planned_information > 0.0))
      grids.plan.planned_information = cfg.design.planned_information;
  }

  DiagnosticsReport report;
  report.oracle_max_error = oracle_equivalence_sweep(cfg.design.seed, 100, 50);
  if (!(report.oracle_max_error < 1e-10))
    fail(Err::validation, "score oracle disagreement above 1e-10");

  const ReplicateSet set = run_replicates(cfg.design, R, grids, workers);
  if (!grids.v_grid.empty()) brownian_diagnostics(set, report);
  if (!grids.t_grid.empty() && !grids.theta_grid.empty()) field_diagnostics(set, report);
  report.replicates = R;

  int usable = 0, rejected = 0, covered = 0, converged = 0;
  for (const auto& rec : set.per_replicate) {
    if (rec.failed) continue;
    ++usable;
    if (rec.rejected_look > 0) ++rejected;
    if (rec.beta_end_converged) {
      ++converged;
      if (rec.ci_covers) ++covered;
    }
  }
  report.failed_replicates = R - usable;
  if (grids.with_monitoring && usable > 0)
    report.type1_rate = static_cast<double>(rejected) / usable;
  if (grids.with_estimation && converged > 0)
    report.coverage_rate = static_cast<double>(covered) / converged;

  emit(out_dir, "diagnostics.json", diagnostics_to_json(report));
  emit(out_dir, "replicates.csv", replicates_long_csv(set));
  manifest.finalize({"diagnostics.json", "replicates.csv"});
  std::cout << "validate: " << R << " replicates, " << report.failed_replicates
            << " failed -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"adaptsurv: survival-trial simulation, score evaluation and sequential monitoring"};
  app.require_subcommand(1);

  std::string config_path, trial_path, plan_path, out_dir;
  std::string beta_list, variant_name = "subsample", init_list;
  std::string spending_name = "obrien_fleming_type", sided = "two";
  double t_flag = 0.0, theta_flag = 0.0, fraction_flag = 0.0, planned_flag = 0.0;
  double alpha = 0.05, ref_beta = 0.0, tol = 1e-10;
  int looks = 1, max_iter = 60, replicates_flag = 0, threads_flag = 0;

  auto* sim = app.add_subcommand("simulate", "generate a trial from a config");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--out", out_dir)->required();

  auto* sc = app.add_subcommand("score", "evaluate the score at (beta, t, theta)");
  sc->add_option("--trial", trial_path)->required();
  sc->add_option("--beta", beta_list)->required();
  auto* sc_t = sc->add_option("--t", t_flag);
  sc_t->required();
  auto* sc_theta = sc->add_option("--theta", theta_flag);
  sc->add_option("--variant", variant_name);
  sc->add_option("--out", out_dir)->required();

  auto* est = app.add_subcommand("estimate", "maximum partial likelihood estimate");
  est->add_option("--trial", trial_path)->required();
  auto* est_t = est->add_option("--t", t_flag);
  auto* est_theta = est->add_option("--theta", theta_flag);
  auto* est_frac = est->add_option("--fraction", fraction_flag);
  auto* est_planned = est->add_option("--planned-information", planned_flag);
  est->add_option("--ref-beta", ref_beta);
  est->add_option("--init", init_list);
  est->add_option("--tol", tol);
  est->add_option("--max-iter", max_iter);
  est->add_option("--out", out_dir)->required();

  auto* bnd = app.add_subcommand("boundaries", "alpha-spending critical values");
  bnd->add_option("--alpha", alpha);
  bnd->add_option("--looks", looks)->required();
  bnd->add_option("--spending", spending_name);
  bnd->add_option("--sided", sided);
  bnd->add_option("--out", out_dir)->required();

  auto* mon = app.add_subcommand("monitor", "sequential decisions for a trial");
  mon->add_option("--trial", trial_path)->required();
  mon->add_option("--config", plan_path)->required();
  mon->add_option("--out", out_dir)->required();

  auto* val = app.add_subcommand("validate", "Monte Carlo diagnostics");
  val->add_option("--config", config_path)->required();
  auto* val_reps = val->add_option("--replicates", replicates_flag);
  auto* val_threads = val->add_option("--threads", threads_flag);
  val->add_option("--out", out_dir)->required();

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir);
    if (sc->parsed())
      return cmd_score(trial_path, beta_list, t_flag,
                       *sc_theta ? std::optional<double>(theta_flag) : std::nullopt, variant_name,
                       out_dir);
    if (est->parsed())
      return cmd_estimate(trial_path, *est_t ? std::optional<double>(t_flag) : std::nullopt,
                          *est_theta ? std::optional<double>(theta_flag) : std::nullopt,
                          *est_frac ? std::optional<double>(fraction_flag) : std::nullopt,
                          *est_planned ? std::optional<double>(planned_flag) : std::nullopt,
                          ref_beta, init_list, tol, max_iter, out_dir);
    if (bnd->parsed()) return cmd_boundaries(alpha, looks, spending_name, sided, out_dir);
    if (mon->parsed()) return cmd_monitor(trial_path, plan_path, out_dir);
    if (val->parsed())
      return cmd_validate(config_path,
                          *val_reps ? std::optional<int>(replicates_flag) : std::nullopt,
                          *val_threads ? std::optional<int>(threads_flag) : std::nullopt, out_dir);
  } catch (const Error& e) {
    std::cerr << "error[" << err_code_string(e.code) << "] " << e.what() << "\n";
    return e.code == Err::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL] " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace adaptsurv
