#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slg/config.hpp"
#include "slg/solver.hpp"
#include "slg/verify.hpp"

// Artifact emission. CSV files hold only reproducible data (17 significant
// digits, fixed iteration order, no wall-clock columns); timing lives in the
// JSON report alone.

namespace slg {

struct VerificationBundle {
  std::optional<PhaseAdmissibilityReport> admissibility;
  std::optional<ConvexityReport> convexity;
  std::optional<MongeAmpereReport> monge_ampere;
  std::optional<EnergyReport> energy;
  std::optional<ResidualTrendReport> residual_trend;
  std::optional<ArrowAsymptoticsReport> arrow;
  std::optional<IdentitySweepReport> identity_sweep;
  std::optional<GradientOracleReport> gradient_oracle;
  std::vector<std::string> notes;

  bool any_hard_failure() const;
};

// One row per cylinder node: t, coordinates, vhat, u, phase, smallest
// operator eigenvalue, degenerate residual. Columns without a defined value
// (faces; synthetic-chi runs without a reconstructed u) hold nan.
void write_fields_csv(const std::string& path, const TauRecord& rec, const ProblemSetup& setup);

// One row per tau record (attempted ones only).
void write_trend_tau_csv(const std::string& path, const SweepResult& sweep,
                         const ResidualTrendReport* trend);

// One row per grid level of a refinement sweep.
void write_trend_grid_csv(const std::string& path, std::span<const int> grids,
                          std::span<const double> deviations);

struct ReportInputs {
  std::string command;
  const RunConfig* config = nullptr;
  const ProblemSetup* setup = nullptr;
  const SweepResult* sweep = nullptr;
  const VerificationBundle* verification = nullptr;
  bool negated = false;
  std::string status;
  std::string failure_reason;
  int exit_code = 0;
  std::vector<std::string> artifact_files;
  double wall_seconds = 0.0;
  std::optional<double> extracted_time_variation;
  std::optional<double> extracted_tau_min;
  // Grid refinement sweep results (cmd_sweep grid).
  std::vector<int> grid_levels;
  std::vector<double> grid_deviations;
  std::optional<double> grid_order;
};

void write_report_json(const std::string& path, const ReportInputs& in);

// Shared float formatting for CSV cells: %.17g.
std::string format_g17(double x);

}  // namespace slg
