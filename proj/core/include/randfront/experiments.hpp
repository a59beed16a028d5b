#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "randfront/config.hpp"
#include "randfront/lyapunov.hpp"

namespace randfront {

// One pass/fail line. Criteria named "AC<n>.<clause>" gate the acceptance
// suite; other ids are report-level diagnostics.
struct Verdict {
  std::string criterion;
  bool pass = false;
  double value = 0.0;
  double lo = 0.0;  // admissible interval (as applicable)
  double hi = 0.0;
  std::string note;
};

struct ExperimentReport {
  std::string name;
  std::string config_echo;
  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  nlohmann::ordered_json aggregates = nlohmann::ordered_json::object();
  std::vector<Verdict> verdicts;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
  std::string summary_csv;

  bool all_pass() const;
  std::string verdict_lines() const;
  // report.json, summary.csv, manifest.json under dir; write-once unless
  // overwrite is set.
  void write(const std::filesystem::path& dir, bool overwrite) const;
};

// Profile for the configured potential, memoized per process so every
// experiment in a run shares one v0 / sigma source.
const LyapunovProfile& shared_profile(const RunConfig& cfg);

ExperimentReport run_homogeneous_baseline(const RunConfig& cfg);
ExperimentReport run_log_gap(const RunConfig& cfg);
ExperimentReport run_front_clt(const RunConfig& cfg);
ExperimentReport run_logu_clt(const RunConfig& cfg);
ExperimentReport run_tilt_concentration(const RunConfig& cfg);
ExperimentReport run_perturbation_diag(const RunConfig& cfg);
ExperimentReport run_exact_ld_diag(const RunConfig& cfg);
ExperimentReport run_vc_scan(const RunConfig& cfg);
ExperimentReport run_breakpoint_approx(const RunConfig& cfg);

ExperimentReport run_experiment(const RunConfig& cfg, std::string_view name);
std::vector<std::string> experiment_names();

}  // namespace randfront
