#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slg/barriers.hpp"
#include "slg/fields.hpp"
#include "slg/spectral.hpp"

// Damped Newton + two-parameter continuation.
//
// Inner loop: solve F(v) = phi_zeta on one cylinder grid, where F is the
// arctan-sum of the scaled Hessian and phi_zeta blends the subsolution's
// pointwise phase (zeta = 0, solved exactly by v_sub) into the constant
// branch target (zeta = 1). Outer loop: walk tau down a fixed schedule on
// the fixed rescaled grid, tracking the Cauchy tail of the solutions.

namespace slg {

struct ContinuationSchedule {
  std::vector<double> zeta_steps{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> tau_sequence{1.0, 0.25, 0.0625, 0.015625, 0.00390625};
  bool warm_start = false;
  void validate() const;
};

struct NewtonSettings {
  double residual_tolerance = 1e-10;
  int max_iterations = 50;
  // Backtracking halves the step; after a damped accept, up to
  // polish_evaluations secant refinements of the step length run against the
  // signed residual at the worst node (overshoot recovery).
  double backtrack_factor = 0.5;
  double min_step = 9.5367431640625e-7;  // 2^-20
  int polish_evaluations = 2;
  double linear_reduction = 1e-10;
  int linear_max_iterations = 5000;
  // Inexact Newton: pick the linear reduction per step from the outer
  // residual's contraction instead of linear_reduction. Oversolving is
  // wasted work, and transiently near-singular linearizations put the
  // attainable Krylov floor well above a fixed deep target.
  bool adaptive_forcing = true;
};

enum class NewtonStatus {
  kConverged,
  kMaxIterations,
  kStepCollapse,
  kLinearFailure,
  kSandwichViolation,
  kEllipticityLoss,
};

const char* to_string(NewtonStatus s);

struct NewtonRecord {
  NewtonStatus status = NewtonStatus::kMaxIterations;
  int iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  // Monitors over accepted iterates.
  double min_gradient_eigenvalue = 1e308;  // smallest eig of (I+M^2)^{-1} seen
  double min_matrix_eigenvalue = 1e308;    // smallest eig of M seen
  long linear_iterations = 0;
  bool damped = false;
  int transient_sandwich_violations = 0;
  SandwichReport sandwich;
};

// Residual r = arctan_sum(chi + D^2 v) - phi_zeta on interior nodes, zero on
// the faces. phi_zeta = (1 - zeta) * barriers.sub_phase + zeta * big_theta.
CylinderField residual_field(const CylinderField& v, const ChiField& chi, double zeta,
                             const BarrierPair& barriers, const PhaseBranch& branch);

// Coefficients (I + M^2)^{-1} of the linearized operator at state v,
// interior-node-major, AoS packed.
struct CoefficientField {
  CylinderGrid grid;
  int m = 0;
  std::vector<double> packed;
};

CoefficientField gradient_coefficients(const CylinderField& v, const ChiField& chi);

// J w = <(I+M^2)^{-1}, D^2 w>_F per interior node (Frobenius pairing, so
// off-diagonal coefficients count twice). w's faces are treated as zero.
CylinderField apply_linearized(const CoefficientField& coeffs, const ChiField& chi,
                               const CylinderField& w);

// Directional derivative of the residual at v in direction w.
CylinderField linearize_apply(const CylinderField& v, const ChiField& chi,
                              const CylinderField& w);

struct LinearSolveStats {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Solve J x = rhs with x = 0 on the faces. n = 1 uses a direct
// block-tridiagonal factorization over time levels (periodic coupling stays
// inside the dense spatial blocks); n >= 2 uses BiCGStab(2) preconditioned by
// exact tridiagonal solves along each spatial column's time line.
// Deterministic either way.
LinearSolveStats solve_linearized(const CoefficientField& coeffs, const ChiField& chi,
                                  const CylinderField& rhs, CylinderField* x,
                                  double reduction, int max_iterations);

// Damped Newton on fixed (chi, zeta). v is the starting state and receives
// the final iterate. Accepted iterates must stay inside the barrier sandwich.
NewtonRecord newton_solve(CylinderField& v, const ChiField& chi, double zeta,
                          const BarrierPair& barriers, const PhaseBranch& branch,
                          const NewtonSettings& settings);

struct ZetaStepRecord {
  double zeta = 0.0;
  NewtonRecord newton;
  bool inserted_by_bisection = false;
};

struct ZetaPath {
  bool success = false;
  std::vector<ZetaStepRecord> steps;
  int bisections = 0;
  std::string failure;
};

// Walk zeta from 0 to 1 starting at v = v_sub. Newton failure inserts a
// midpoint (up to 8 per original interval) and retries from the last good
// state. On success v holds the zeta = 1 solution.
ZetaPath run_zeta_path(CylinderField& v, const ChiField& chi, const BarrierPair& barriers,
                       const PhaseBranch& branch, const ContinuationSchedule& schedule,
                       const NewtonSettings& settings);

// Problem instance: potential pair or a synthetic constant chi matrix.
struct ProblemSetup {
  TorusGrid space;
  int time_points = 33;
  std::optional<BoundaryPair> pair;
  std::optional<SymmetricMatrix> chi_matrix;
  PhaseBranch branch;
  bool negated = false;  // inputs were mirrored onto the positive branch

  ChiField make_chi(double tau) const;
};

struct TauRecord {
  double tau = 0.0;
  bool attempted = false;
  bool success = false;
  double delta = 0.0;
  double lambda_sub = 0.0;
  double lambda_super = 0.0;
  ZetaPath path;
  CylinderField vhat;
  double sup_vhat = 0.0;
  double sup_gradient = 0.0;
  double c1_norm = 0.0;
  SandwichReport final_sandwich;
  NormalDerivativeReport normal_derivatives;
  double min_matrix_eigenvalue = 0.0;  // over final-state interior nodes
  double wall_seconds = 0.0;
  std::string failure;
};

struct SweepResult {
  std::vector<TauRecord> records;
  std::vector<double> cauchy_gaps;  // |vhat_{k+1} - vhat_k|_inf
  bool success = false;
  std::string failure_reason;
};

// Descend the tau schedule. Later taus run only if every earlier tau
// succeeded. jobs > 1 fans independent tau solves across threads; results are
// merged in schedule order so output does not depend on timing.
SweepResult run_tau_sweep(const ProblemSetup& setup, const ContinuationSchedule& schedule,
                          const NewtonSettings& settings, int jobs = 1);

// u = (1-t) u0 + t u1 + vhat_last, and its per-column time variation.
struct ExtractedGeodesic {
  CylinderField u;
  double tau_min = 0.0;
  double time_variation = 0.0;
};

ExtractedGeodesic extract_geodesic(const SweepResult& sweep, const BoundaryPair& pair);

double norm_inf_interior(const CylinderField& f);

}  // namespace slg
