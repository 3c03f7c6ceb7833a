#pragma once

#include <string>
#include <vector>

// Subcommand entry points shared by the CLI binary and the test suite. Each
// returns a process exit code and writes artifacts under the output
// directory; diagnostics go to the standard streams.

namespace slg {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAdmissibility = 3;
inline constexpr int kExitSolver = 4;
inline constexpr int kExitVerification = 5;

struct CommandOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<double> tau_schedule;  // overrides the config schedule when nonempty
  int grid = 0;                      // > 0 overrides the spatial grid
  int time_grid = 0;                 // > 0 overrides the time grid
  int jobs = 1;
  unsigned seed = 1u;                // random test instances in verify/selftest
  std::string kernel = "auto";       // auto | scalar | avx2
};

// Full pipeline: admissibility gate, barrier construction, continuation in
// zeta, tau descent, verification checks, artifact emission.
int cmd_solve(const CommandOptions& opt);

// Standalone verification suite on the configured instance plus the
// config-independent identity and asymptotics checks.
int cmd_verify(const CommandOptions& opt);

// parameter = "tau": tau descent and the trend table.
// parameter = "grid": refinement sweep of the n = 1 determinant oracle.
int cmd_sweep(const CommandOptions& opt, const std::string& parameter);

// Config-free console checks: identity sweeps, gradient oracle, eigenvalue
// asymptotics, kernel equivalence, stencil weights.
int cmd_selftest(const CommandOptions& opt);

}  // namespace slg
