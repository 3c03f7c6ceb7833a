#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slg/fields.hpp"
#include "slg/solver.hpp"
#include "slg/symmetric_matrix.hpp"

// Run configuration: a sectioned key = value text format. See
// configs/example_annotated.cfg for the full grammar. Parse errors carry the
// 1-based line number.

namespace slg {

struct RunConfig {
  int n = 0;
  int grid_points = 16;
  int time_points = 33;
  std::optional<double> theta_override;
  std::optional<double> big_theta_override;

  std::optional<PotentialSpec> u0;
  std::optional<PotentialSpec> u1;
  std::optional<SymmetricMatrix> chi_matrix;  // (n+1) x (n+1), used verbatim

  ContinuationSchedule schedule;
  NewtonSettings newton;
  std::vector<int> grid_sweep{16, 32, 64};

  bool check_monge_ampere = true;  // effective only for n = 1
  bool check_energy = true;
  bool check_residual_trend = true;
  bool check_convexity = true;
  double monge_ampere_bound = 0.05;

  std::string source;  // file path or "<inline>"

  void validate() const;
  PhaseBranch branch() const;
  // Problem setup before any negative-branch routing.
  ProblemSetup setup() const;
  BoundaryPair pair() const;  // throws unless both potentials are present
};

RunConfig parse_config_text(const std::string& text, const std::string& name);
RunConfig parse_config_file(const std::string& path);

}  // namespace slg
