#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "randfront/experiments.hpp"

namespace randfront {

struct AcceptanceOptions {
  unsigned jobs = 0;
  std::string filter;  // run only criteria whose id contains this substring
  std::filesystem::path report_dir;  // when set, experiment reports land here
  bool overwrite = false;
};

struct AcceptanceResult {
  std::vector<Verdict> verdicts;
  bool all_pass() const;
};

// Runs the acceptance criteria (AC1..AC14), printing one pass/fail line per
// clause to `log` as results arrive. Tolerances are pinned here.
AcceptanceResult run_acceptance(const AcceptanceOptions& opt, std::ostream& log);

}  // namespace randfront
