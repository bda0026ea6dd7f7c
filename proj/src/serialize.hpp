#pragma once

#include <string>
#include <vector>

#include "cox.hpp"
#include "info_time.hpp"
#include "monitor.hpp"
#include "mple.hpp"
#include "sim.hpp"
#include "validate.hpp"

namespace adaptsurv {

// Shortest round-trip decimal encoding; parsing accepts exactly what the
// encoder emits plus inf/-inf/nan.
std::string format_double(double v);
double parse_double(const std::string& s);

std::string trial_to_csv(const TrialData& data);
TrialData trial_from_csv(const std::string& text);
std::string allocation_log_to_csv(const SimOutcome& outcome);

std::string score_to_json(const ScoreEvaluation& ev, ScoreVariant variant);
std::string mple_to_json(const MpleResult& res);
std::string boundaries_to_csv(const MonitoringPlan& plan, const std::vector<double>& bounds);
std::string monitor_to_csv(const MonitorResult& res);
std::string rescaled_to_csv(const RescaledPath& path);
std::string diagnostics_to_json(const DiagnosticsReport& report);
std::string replicates_long_csv(const ReplicateSet& set);

// Run manifest: written atomically (tmp + rename) with status "running"
// before the pipeline and finalized with the output inventory afterwards.
// Timestamps honor SOURCE_DATE_EPOCH for reproducible runs.
struct ManifestWriter {
  std::string out_dir;
  std::string path;
  uint64_t root_seed = 0;
  std::string config_hash;
  std::string started_at;

  static ManifestWriter begin(const std::string& out_dir, uint64_t root_seed,
                              const std::string& config_text);
  void finalize(const std::vector<std::string>& output_files) const;
};

void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace adaptsurv
