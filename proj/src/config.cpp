#include "config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "errors.hpp"

namespace adaptsurv {

namespace {

std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

[[noreturn]] void parse_error(int line, const std::string& msg) {
  fail(Err::parse, "line " + std::to_string(line) + ": " + msg);
}

[[noreturn]] void key_error(const std::string& key, const std::string& reason) {
  fail(Err::validation, key + ": " + reason);
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "inf" || t == "+inf") return kInf;
  double out = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size()) key_error(key, "not a number: '" + t + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long out = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size()) key_error(key, "not an integer: '" + t + "'");
  return out;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  uint64_t out = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size())
    key_error(key, "not an unsigned integer: '" + t + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, std::string v) {
  std::string t = trim(v);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') key_error(key, "unbalanced brackets");
    t = trim(std::string_view(t).substr(1, t.size() - 2));
  }
  std::vector<double> out;
  size_t start = 0;
  while (start <= t.size()) {
    size_t comma = t.find(',', start);
    if (comma == std::string::npos) comma = t.size();
    const std::string item = trim(std::string_view(t).substr(start, comma - start));
    if (!item.empty()) out.push_back(to_double(key, item));
    if (comma == t.size()) break;
    start = comma + 1;
  }
  if (out.empty()) key_error(key, "empty list");
  return out;
}

struct RawConfig {
  // section -> key -> value (section-qualified duplicates rejected)
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& sec, const std::string& key) const {
    const auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key) > 0;
  }
  const std::string& get(const std::string& sec, const std::string& key) const {
    return sections.at(sec).at(key);
  }
};

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"design",
     {"n", "entry", "entry_rate", "entry_times", "beta0", "planned_information", "v_bar",
      "covariate_bound", "seed"}},
    {"hazard", {"cut_points", "rates", "censor_rate", "admin_horizon"}},
    {"allocation",
     {"policy", "p", "initial_balls_per_arm", "balls_added", "response_window", "success_rule"}},
    {"monitoring",
     {"looks", "alpha", "spending", "sided", "null_beta", "planned_information"}},
    {"validation", {"replicates", "v_grid", "t_grid", "theta_grid", "est_v_grid", "threads"}},
};

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::string section;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    ++line_no;
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') parse_error(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (kKnownKeys.find(section) == kKnownKeys.end())
        parse_error(line_no, "unknown section [" + section + "]");
      if (!raw.sections.emplace(section, std::map<std::string, std::string>{}).second)
        parse_error(line_no, "duplicate section [" + section + "]");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) parse_error(line_no, "expected 'key = value'");
    if (section.empty()) parse_error(line_no, "key outside any section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) parse_error(line_no, "empty key");
    if (kKnownKeys.at(section).count(key) == 0)
      parse_error(line_no, "unknown key '" + key + "' in [" + section + "]");
    if (!raw.sections[section].emplace(key, value).second)
      parse_error(line_no, "duplicate key '" + key + "' in [" + section + "]");
    if (pos > text.size()) break;
  }
  return raw;
}

}  // namespace

ParsedConfig parse_config(const std::string& text) {
  const RawConfig raw = tokenize(text);
  ParsedConfig out;
  out.raw = text;

  if (raw.sections.count("design")) {
    out.has_design = true;
    DesignConfig& d = out.design;
    if (!raw.has("design", "n")) key_error("n", "required in [design]");
    d.target_enrollment = static_cast<int>(to_int("n", raw.get("design", "n")));
    if (d.target_enrollment < 2) key_error("n", "designs need at least 2 subjects");
    if (!raw.has("design", "beta0")) key_error("beta0", "required in [design]");
    d.beta0 = to_list("beta0", raw.get("design", "beta0"));

    const std::string entry =
        raw.has("design", "entry") ? trim(raw.get("design", "entry")) : "poisson";
    if (entry == "poisson") {
      d.entry_process.kind = EntryKind::poisson;
      if (!raw.has("design", "entry_rate")) key_error("entry_rate", "required for poisson entry");
      d.entry_process.rate = to_double("entry_rate", raw.get("design", "entry_rate"));
    } else if (entry == "fixed") {
      d.entry_process.kind = EntryKind::fixed_schedule;
      if (!raw.has("design", "entry_times")) key_error("entry_times", "required for fixed entry");
      d.entry_process.times = to_list("entry_times", raw.get("design", "entry_times"));
    } else {
      key_error("entry", "must be 'poisson' or 'fixed'");
    }

    d.planned_information = raw.has("design", "planned_information")
                                ? to_double("planned_information",
                                            raw.get("design", "planned_information"))
                                : static_cast<double>(d.target_enrollment);
    if (raw.has("design", "v_bar")) d.v_bar = to_double("v_bar", raw.get("design", "v_bar"));
    if (raw.has("design", "covariate_bound"))
      d.covariate_bound = to_double("covariate_bound", raw.get("design", "covariate_bound"));
    if (raw.has("design", "arm_scale"))
      d.arm_scale = to_double("arm_scale", raw.get("design", "arm_scale"));
    if (raw.has("design", "seed")) d.seed = to_u64("seed", raw.get("design", "seed"));

    if (!raw.sections.count("hazard")) key_error("hazard", "section required with [design]");
    HazardSpec& h = d.hazard;
    if (!raw.has("hazard", "rates")) key_error("rates", "required in [hazard]");
    h.rates = to_list("rates", raw.get("hazard", "rates"));
    h.cut_points = raw.has("hazard", "cut_points")
                       ? to_list("cut_points", raw.get("hazard", "cut_points"))
                       : std::vector<double>{0.0};
    if (raw.has("hazard", "censor_rate"))
      h.censor_rate = to_double("censor_rate", raw.get("hazard", "censor_rate"));
    if (!raw.has("hazard", "admin_horizon"))
      key_error("admin_horizon", "required in [hazard]");
    h.admin_horizon = to_double("admin_horizon", raw.get("hazard", "admin_horizon"));

    if (!raw.sections.count("allocation")) key_error("allocation", "section required with [design]");
    PolicySpec& pol = d.allocation_policy;
    if (!raw.has("allocation", "policy")) key_error("policy", "required in [allocation]");
    const std::string policy = trim(raw.get("allocation", "policy"));
    if (policy == "complete_randomization") pol.kind = PolicyKind::complete_randomization;
    else if (policy == "randomized_play_the_winner")
      pol.kind = PolicyKind::randomized_play_the_winner;
    else if (policy == "deterministic_alternation")
      pol.kind = PolicyKind::deterministic_alternation;
    else if (policy == "peek_future") pol.kind = PolicyKind::peek_future;
    else key_error("policy", "unknown allocation policy '" + policy + "'");
    if (raw.has("allocation", "p")) pol.p = to_double("p", raw.get("allocation", "p"));
    if (raw.has("allocation", "initial_balls_per_arm"))
      pol.initial_balls_per_arm = static_cast<int>(
          to_int("initial_balls_per_arm", raw.get("allocation", "initial_balls_per_arm")));
    if (raw.has("allocation", "balls_added"))
      pol.balls_added = static_cast<int>(to_int("balls_added", raw.get("allocation", "balls_added")));
    if (raw.has("allocation", "response_window"))
      pol.response_window = to_double("response_window", raw.get("allocation", "response_window"));
    if (raw.has("allocation", "success_rule")) {
      const std::string rule = trim(raw.get("allocation", "success_rule"));
      if (rule == "survival_past_window") pol.success_rule = SuccessRule::survival_past_window;
      else if (rule == "event_before_window") pol.success_rule = SuccessRule::event_before_window;
      else key_error("success_rule", "unknown rule '" + rule + "'");
    }

    d.validate();
  } else if (raw.sections.count("hazard") || raw.sections.count("allocation")) {
    key_error("design", "[hazard]/[allocation] need a [design] section");
  }

  if (raw.sections.count("monitoring")) {
    out.has_monitoring = true;
    MonitoringPlan& p = out.plan;
    if (!raw.has("monitoring", "looks")) key_error("looks", "required in [monitoring]");
    const std::string looks = trim(raw.get("monitoring", "looks"));
    if (looks.find(',') == std::string::npos && looks.find('.') == std::string::npos &&
        looks.find('[') == std::string::npos) {
      const long long k = to_int("looks", looks);
      if (k < 1) key_error("looks", "needs at least one look");
      for (long long i = 1; i <= k; ++i)
        p.v_grid.push_back(static_cast<double>(i) / static_cast<double>(k));
    } else {
      p.v_grid = to_list("looks", looks);
    }
    if (raw.has("monitoring", "alpha")) p.alpha = to_double("alpha", raw.get("monitoring", "alpha"));
    if (raw.has("monitoring", "spending")) {
      const std::string sp = trim(raw.get("monitoring", "spending"));
      if (sp == "obrien_fleming_type") p.spending = Spending::obrien_fleming_type;
      else if (sp == "pocock_type") p.spending = Spending::pocock_type;
      else if (sp == "linear") p.spending = Spending::linear;
      else key_error("spending", "unknown spending function '" + sp + "'");
    }
    if (raw.has("monitoring", "sided")) {
      const std::string sd = trim(raw.get("monitoring", "sided"));
      if (sd == "one" || sd == "1") p.sidedness = Sidedness::one;
      else if (sd == "two" || sd == "2") p.sidedness = Sidedness::two;
      else key_error("sided", "must be 'one' or 'two'");
    }
    if (raw.has("monitoring", "null_beta"))
      p.null_beta = to_double("null_beta", raw.get("monitoring", "null_beta"));
    if (raw.has("monitoring", "planned_information"))
      p.planned_information =
          to_double("planned_information", raw.get("monitoring", "planned_information"));
    else if (out.has_design)
      p.planned_information = out.design.planned_information;
    if (out.has_design && !p.v_grid.empty() && p.v_grid.back() > out.design.v_bar)
      key_error("looks", "monitored fractions exceed the design's v_bar");
    if (p.planned_information > 0.0) p.validate();
  }

  if (raw.sections.count("validation")) {
    if (raw.has("validation", "replicates"))
      out.replicates = static_cast<int>(to_int("replicates", raw.get("validation", "replicates")));
    if (raw.has("validation", "v_grid"))
      out.v_grid = to_list("v_grid", raw.get("validation", "v_grid"));
    if (raw.has("validation", "t_grid"))
      out.t_grid = to_list("t_grid", raw.get("validation", "t_grid"));
    if (raw.has("validation", "theta_grid"))
      out.theta_grid = to_list("theta_grid", raw.get("validation", "theta_grid"));
    if (raw.has("validation", "est_v_grid"))
      out.est_v_grid = to_list("est_v_grid", raw.get("validation", "est_v_grid"));
    if (raw.has("validation", "threads"))
      out.threads = static_cast<int>(to_int("threads", raw.get("validation", "threads")));
    if (out.replicates < 2) key_error("replicates", "must be >= 2");
    if (out.has_design) {
      for (double v : out.v_grid)
        if (v > out.design.v_bar) key_error("v_grid", "fraction exceeds the design's v_bar");
      for (double v : out.est_v_grid)
        if (v > out.design.v_bar) key_error("est_v_grid", "fraction exceeds the design's v_bar");
    }
  }

  return out;
}

}  // namespace adaptsurv
