#pragma once

#include <string>
#include <vector>

#include "monitor.hpp"
#include "trial.hpp"

namespace adaptsurv {

// Parsed form of the flat sectioned key-value config format:
//   [design] / [hazard] / [allocation] / [monitoring] / [validation]
// '#' starts a comment, values are scalars or comma-separated lists
// (brackets optional). Unknown sections or keys are rejected.
struct ParsedConfig {
  DesignConfig design;
  bool has_design = false;

  MonitoringPlan plan;
  bool has_monitoring = false;

  int replicates = 2000;
  std::vector<double> v_grid;
  std::vector<double> t_grid;
  std::vector<double> theta_grid;
  std::vector<double> est_v_grid;
  int threads = 0;

  std::string raw;  // original text, for the manifest fingerprint
};

ParsedConfig parse_config(const std::string& text);

}  // namespace adaptsurv
