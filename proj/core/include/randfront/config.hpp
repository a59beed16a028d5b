#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "randfront/hitting.hpp"
#include "randfront/lyapunov.hpp"
#include "randfront/potential.hpp"
#include "randfront/solver_types.hpp"

namespace randfront {

struct PamBlock {
  GridConfig grid;
  double horizon = 200.0;
  double threshold_a = 0.5;
  InitialCondition ic;
};

struct KppBlock {
  GridConfig grid;
  double horizon = 200.0;
  double threshold_eps = 0.5;
  std::string nonlinearity = "logistic";  // logistic | gm:<n> | offspring:<law>
  InitialCondition ic;
};

struct BbmreBlock {
  std::string law = "binary";  // binary | one_three | gm:<n> | table:p1,p2,...
  std::size_t cap = 1000000;
  std::size_t reps = 100000;
};

struct ExperimentBlock {
  std::string name = "homogeneous_baseline";
  long seeds = 10;
  std::vector<long> n_grid = {50, 100, 200};
  double t_min = 20.0;
  double t_max = 200.0;
  std::vector<double> x_grid = {50, 100, 150, 200, 250, 300, 350, 400};
  double v = 0.0;  // 0 = use the profile's v0
  unsigned jobs = 0;
};

// Full run configuration: one structured-text file, sections per module.
struct RunConfig {
  std::string output_dir = "out";
  std::uint64_t base_seed = 20260801;
  PotentialSpec potential = PotentialSpec::matern(3.0, 2.0, 0.9, 1);
  BvpConfig bvp;
  LyapunovConfig lyapunov;
  PamBlock pam;
  KppBlock kpp;
  BbmreBlock bbmre;
  ExperimentBlock experiment;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& file);
  std::string serialize() const;

  // Dot-path override, e.g. "pam.dx=0.025" or "base_seed=7".
  void apply_override(const std::string& assignment);

  void validate() const;
  std::uint64_t content_hash() const;  // FNV-1a of the canonical serialization
};

}  // namespace randfront
