#include "serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "stats.hpp"

namespace adaptsurv {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double out = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(Err::parse, "bad number '" + s + "'");
  return out;
}

namespace {

std::string join_doubles(const std::vector<double>& v, char sep = ',') {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
  return out;
}

std::string encode_path(const CovariatePath& path, int component) {
  std::string out;
  for (int s = 0; s < path.segments(); ++s) {
    if (s) out += ';';
    out += format_double(path.jump_times[s]);
    out += ':';
    out += format_double(path.values[s * path.dim + component]);
  }
  return out;
}

ordered_json matrix_json(const std::vector<double>& flat, int d) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < d; ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < d; ++c) row.push_back(flat[r * d + c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string trial_to_csv(const TrialData& data) {
  std::string out = "# adaptsurv trial v1\n";
  out += "# horizon=" + format_double(data.horizon) + "\n";
  if (!data.true_beta.empty()) out += "# true_beta=" + join_doubles(data.true_beta) + "\n";
  if (data.baseline_hazard) {
    const HazardSpec& h = *data.baseline_hazard;
    out += "# hazard_cuts=" + join_doubles(h.cut_points) + "\n";
    out += "# hazard_rates=" + join_doubles(h.rates) + "\n";
    out += "# hazard_censor_rate=" + format_double(h.censor_rate) + "\n";
    out += "# hazard_admin_horizon=" + format_double(h.admin_horizon) + "\n";
  }
  const int d = data.covariate_dim();
  out += "subject_id,entry_time,observed_time,event_indicator,arm";
  for (int k = 0; k < d; ++k) out += ",z" + std::to_string(k);
  out += "\n";
  for (int i = 0; i < data.n(); ++i) {
    const Subject& s = data.subjects[i];
    out += std::to_string(i);
    out += ',' + format_double(s.entry_time);
    out += ',' + format_double(s.observed_time);
    out += ',' + std::to_string(s.event_indicator);
    out += ',' + std::to_string(s.arm);
    for (int k = 0; k < d; ++k) out += ',' + encode_path(s.covariates, k);
    out += '\n';
  }
  return out;
}

TrialData trial_from_csv(const std::string& text) {
  double horizon = kInf;
  std::vector<double> true_beta;
  std::optional<HazardSpec> hazard;
  std::vector<double> hz_cuts, hz_rates;
  double hz_censor = 0.0, hz_admin = kInf;
  bool saw_hazard = false;

  std::vector<Subject> subjects;
  bool header_seen = false;
  int dim = 0;

  const auto parse_list = [](const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) out.push_back(parse_double(item));
    return out;
  };

  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string meta = line.substr(1);
      const size_t eq = meta.find('=');
      if (eq == std::string::npos) continue;
      std::string key = meta.substr(0, eq);
      while (!key.empty() && key.front() == ' ') key.erase(key.begin());
      const std::string value = meta.substr(eq + 1);
      if (key == "horizon") horizon = parse_double(value);
      else if (key == "true_beta") true_beta = parse_list(value);
      else if (key == "hazard_cuts") { hz_cuts = parse_list(value); saw_hazard = true; }
      else if (key == "hazard_rates") { hz_rates = parse_list(value); saw_hazard = true; }
      else if (key == "hazard_censor_rate") { hz_censor = parse_double(value); saw_hazard = true; }
      else if (key == "hazard_admin_horizon") { hz_admin = parse_double(value); saw_hazard = true; }
      continue;
    }
    if (!header_seen) {
      const auto cols = split(line, ',');
      if (cols.size() < 6 || cols[0] != "subject_id")
        fail(Err::parse, "line " + std::to_string(line_no) + ": unexpected trial CSV header");
      dim = static_cast<int>(cols.size()) - 5;
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (static_cast<int>(cols.size()) != 5 + dim)
      fail(Err::parse, "line " + std::to_string(line_no) + ": wrong column count");
    const double entry = parse_double(cols[1]);
    const double observed = parse_double(cols[2]);
    const int delta = static_cast<int>(parse_double(cols[3]));
    const int arm = static_cast<int>(parse_double(cols[4]));

    // Reassemble the path from per-component encodings; jump grids must agree.
    std::vector<double> jumps;
    std::vector<std::vector<double>> comp_values(dim);
    for (int k = 0; k < dim; ++k) {
      const auto segs = split(cols[5 + k], ';');
      std::vector<double> jt;
      for (const auto& seg : segs) {
        const auto wv = split(seg, ':');
        if (wv.size() != 2)
          fail(Err::parse, "line " + std::to_string(line_no) + ": bad covariate segment");
        jt.push_back(parse_double(wv[0]));
        comp_values[k].push_back(parse_double(wv[1]));
      }
      if (k == 0) jumps = jt;
      else if (jt != jumps)
        fail(Err::parse, "line " + std::to_string(line_no) +
                             ": covariate components disagree on jump times");
    }
    std::vector<double> flat(jumps.size() * dim);
    for (size_t s = 0; s < jumps.size(); ++s)
      for (int k = 0; k < dim; ++k) flat[s * dim + k] = comp_values[k][s];
    CovariatePath path = CovariatePath::step(std::move(jumps), std::move(flat), dim);

    // Latent times are not persisted; reconstruct the minimal consistent pair.
    const double latent_event = delta == 1 ? observed : kInf;
    const double latent_censor = delta == 1 ? kInf : observed;
    subjects.push_back(Subject::make(entry, std::move(path), latent_event, latent_censor, arm));
  }
  if (!header_seen) fail(Err::parse, "trial CSV has no header row");
  if (saw_hazard) {
    HazardSpec h;
    h.cut_points = hz_cuts.empty() ? std::vector<double>{0.0} : hz_cuts;
    h.rates = hz_rates;
    h.censor_rate = hz_censor;
    h.admin_horizon = hz_admin;
    h.validate();
    hazard = std::move(h);
  }
  return TrialData::build(std::move(subjects), horizon, std::move(true_beta), std::move(hazard));
}

std::string allocation_log_to_csv(const SimOutcome& outcome) {
  std::string out = "subject_id,entry_time,state,arm,uniform_draw,referenced_subjects\n";
  for (size_t i = 0; i < outcome.allocation_log.size(); ++i) {
    const auto& e = outcome.allocation_log[i];
    out += std::to_string(i);
    out += ',' + format_double(e.entry_time);
    out += ',' + e.state;
    out += ',' + std::to_string(e.arm);
    out += ',' + format_double(e.uniform_draw);
    out += ',';
    for (size_t j = 0; j < e.referenced_subjects.size(); ++j) {
      if (j) out += ';';
      out += std::to_string(e.referenced_subjects[j]);
    }
    out += '\n';
  }
  return out;
}

std::string score_to_json(const ScoreEvaluation& ev, ScoreVariant variant) {
  const int d = static_cast<int>(ev.beta.size());
  ordered_json j;
  j["beta"] = ev.beta;
  j["t"] = ev.t;
  j["theta"] = ev.theta;
  j["variant"] =
      variant == ScoreVariant::full_riskset ? "full_riskset" : "subsample_riskset";
  j["score"] = ev.score;
  j["loglik"] = ev.loglik;
  j["information"] = matrix_json(ev.information, d);
  j["vhat"] = matrix_json(ev.vhat, d);
  j["n_events_used"] = ev.n_events_used;
  return j.dump(2) + "\n";
}

std::string mple_to_json(const MpleResult& res) {
  const int d = static_cast<int>(res.beta_hat.size());
  ordered_json j;
  j["beta_hat"] = res.beta_hat;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["diverged"] = res.diverged;
  j["final_score_norm"] = res.final_score_norm;
  j["loglik"] = res.loglik;
  j["information_at_hat"] = matrix_json(res.information_at_hat, d);
  j["vhat_at_hat"] = matrix_json(res.vhat_at_hat, d);
  j["covariance"] = matrix_json(res.covariance, d);
  j["covariance_sandwich"] = matrix_json(res.covariance_sandwich, d);
  ordered_json ci = ordered_json::array();
  for (const auto& interval : res.ci_95) ci.push_back({interval[0], interval[1]});
  j["ci_95"] = std::move(ci);
  j["n_events"] = res.n_events;
  return j.dump(2) + "\n";
}

std::string boundaries_to_csv(const MonitoringPlan& plan, const std::vector<double>& bounds) {
  std::string out = "k,v,alpha_spent,c_k\n";
  for (size_t k = 0; k < plan.v_grid.size(); ++k) {
    out += std::to_string(k + 1);
    out += ',' + format_double(plan.v_grid[k]);
    out += ',' + format_double(total_spending(plan, plan.v_grid[k]));
    out += ',' + format_double(bounds[k]);
    out += '\n';
  }
  return out;
}

std::string monitor_to_csv(const MonitorResult& res) {
  std::string out = "look,v,z,boundary,action\n";
  for (const auto& dec : res.decisions) {
    out += std::to_string(dec.look_index);
    out += ',' + format_double(dec.v);
    out += ',' + format_double(dec.z_statistic);
    out += ',' + format_double(dec.boundary);
    switch (dec.action) {
      case LookAction::continue_: out += ",continue"; break;
      case LookAction::reject: out += ",reject"; break;
      case LookAction::accept_fail_to_reach: out += ",accept_fail_to_reach"; break;
    }
    out += '\n';
  }
  return out;
}

std::string rescaled_to_csv(const RescaledPath& path) {
  std::string out = "v,sigma_hat,bhat,reached\n";
  for (size_t j = 0; j < path.v_grid.size(); ++j) {
    out += format_double(path.v_grid[j]);
    out += ',' + format_double(path.sigma_hat[j]);
    out += ',' + format_double(path.bhat[j]);
    out += ',' + std::to_string(static_cast<int>(path.reached[j]));
    out += '\n';
  }
  return out;
}

std::string diagnostics_to_json(const DiagnosticsReport& report) {
  ordered_json j;
  j["replicates"] = report.replicates;
  j["failed_replicates"] = report.failed_replicates;
  j["v_grid"] = report.v_grid;
  j["bhat_means"] = report.bhat_means;
  j["bhat_mean_ses"] = report.bhat_mean_ses;
  j["bhat_vars"] = report.bhat_vars;
  j["bhat_var_ses"] = report.bhat_var_ses;
  j["ks_statistics"] = report.ks_statistics;
  j["attain_rates"] = report.attain_rates;
  j["increment_covariances"] = report.increment_covariances;
  j["increment_cov_ses"] = report.increment_cov_ses;
  j["field_t"] = report.field_t;
  j["field_theta"] = report.field_theta;
  j["field_means"] = report.field_means;
  j["field_mean_ses"] = report.field_mean_ses;
  j["field_covariance_matrix"] = report.field_covariance_matrix;
  j["minmatch_errors"] = report.minmatch_errors;
  j["minmatch_ses"] = report.minmatch_ses;
  j["minmatch_max_discrepancy"] = report.minmatch_max_discrepancy;
  j["minmatch_worst_se_ratio"] = report.minmatch_worst_se_ratio;
  j["type1_rate"] = report.type1_rate;
  j["coverage_rate"] = report.coverage_rate;
  j["oracle_max_error"] = report.oracle_max_error;
  j["info_vhat_mean_gap"] = report.info_vhat_mean_gap;
  return j.dump(2) + "\n";
}

std::string replicates_long_csv(const ReplicateSet& set) {
  std::string out = "replicate,kind,a,b,value\n";
  std::vector<std::pair<double, double>> points;
  for (double t : set.grids.t_grid)
    for (double th : set.grids.theta_grid)
      if (th <= t) points.emplace_back(t, th);
  const int d = set.config.dim();
  for (int r = 0; r < set.R; ++r) {
    const ReplicateRecord& rec = set.per_replicate[r];
    if (rec.failed) {
      out += std::to_string(r) + ",failed,,,1\n";
      continue;
    }
    for (size_t j = 0; j < rec.bhat.size(); ++j)
      out += std::to_string(r) + ",bhat," + format_double(set.grids.v_grid[j]) + ",," +
             (rec.bhat_reached[j] ? format_double(rec.bhat[j]) : "nan") + "\n";
    for (size_t p = 0; p < points.size(); ++p)
      for (int k = 0; k < d; ++k)
        out += std::to_string(r) + ",field" + std::to_string(k) + ',' +
               format_double(points[p].first) + ',' + format_double(points[p].second) + ',' +
               format_double(rec.field[p * d + k]) + "\n";
    if (set.grids.with_estimation)
      out += std::to_string(r) + ",beta_end,,," +
             (rec.beta_end_converged ? format_double(rec.beta_end) : "nan") + "\n";
    for (size_t j = 0; j < rec.beta_at_v.size(); ++j)
      out += std::to_string(r) + ",beta_v," + format_double(set.grids.est_v_grid[j]) + ",," +
             (rec.beta_at_v_ok[j] ? format_double(rec.beta_at_v[j]) : "nan") + "\n";
    if (set.grids.with_monitoring)
      out += std::to_string(r) + ",rejected_look,,," + std::to_string(rec.rejected_look) + "\n";
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Err::io, "cannot write " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) fail(Err::io, "short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(Err::io, "cannot finalize " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::io, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

std::string iso8601_now() {
  std::time_t t;
  const char* sde = std::getenv("SOURCE_DATE_EPOCH");
  if (sde != nullptr) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hash_string(const std::string& text) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

}  // namespace

ManifestWriter ManifestWriter::begin(const std::string& out_dir, uint64_t root_seed,
                                     const std::string& config_text) {
  fs::create_directories(out_dir);
  ManifestWriter m;
  m.out_dir = out_dir;
  m.path = (fs::path(out_dir) / "manifest.json").string();
  m.root_seed = root_seed;
  m.config_hash = hash_string(config_text);
  m.started_at = iso8601_now();
  ordered_json j;
  j["tool_version"] = "0.1.0";
  j["root_seed"] = root_seed;
  j["config_hash"] = m.config_hash;
  j["started_at"] = m.started_at;
  j["finished_at"] = nullptr;
  j["status"] = "running";
  j["outputs"] = ordered_json::array();
  write_file_atomic(m.path, j.dump(2) + "\n");
  return m;
}

void ManifestWriter::finalize(const std::vector<std::string>& output_files) const {
  ordered_json j;
  j["tool_version"] = "0.1.0";
  j["root_seed"] = root_seed;
  j["config_hash"] = config_hash;
  j["started_at"] = started_at;
  j["finished_at"] = iso8601_now();
  j["status"] = "complete";
  ordered_json outs = ordered_json::array();
  for (const auto& f : output_files) {
    const fs::path p = fs::path(out_dir) / f;
    ordered_json o;
    o["path"] = f;
    o["bytes"] = fs::exists(p) ? static_cast<uint64_t>(fs::file_size(p)) : 0;
    outs.push_back(std::move(o));
  }
  j["outputs"] = std::move(outs);
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace adaptsurv
