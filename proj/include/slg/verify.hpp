#pragma once

#include <span>
#include <string>
#include <vector>

#include "slg/barriers.hpp"
#include "slg/fields.hpp"
#include "slg/solver.hpp"
#include "slg/spectral.hpp"

// Independent cross-checks on solver output. Everything here is a pure
// function of its inputs; nothing feeds back into the solve.

namespace slg {

// Arrow-matrix eigenvalue asymptotics: corner a/tau, first row a_vec/sqrt(tau),
// diagonal lambda_prime. As a grows, the small eigenvalues approach
// lambda_prime at rate 1/a and the large one approaches a/tau.
struct ArrowAsymptoticsReport {
  std::vector<double> a_values;
  std::vector<double> tau_values;
  std::vector<std::vector<double>> small_deviation;   // [a][tau]
  std::vector<std::vector<double>> corner_rel_error;  // [a][tau]
  double deviation_slope = 0.0;  // log-log fit of worst deviation against a
  bool slope_ok = false;         // within -1 +/- 0.2
  bool corner_ok = false;        // every relative error <= 10/a
  bool pass = false;
};

ArrowAsymptoticsReport arrow_asymptotics_check(std::span<const double> lambda_prime,
                                               std::span<const double> a_vec,
                                               std::span<const double> a_values,
                                               std::span<const double> tau_values);

// n = 1 determinant oracle: on the critical branch arctan l1 + arctan l2 =
// pi/2 forces det = 1 for the scaled 2x2 Hessian. Derivatives of vhat are
// taken with fourth-order stencils (independent of the solver's second-order
// ones); the linear-in-t background enters analytically.
struct MongeAmpereReport {
  double max_deviation = 0.0;  // max |det - 1| over covered interior nodes
  long worst_node = -1;
  double bound = 0.0;
  bool pass = false;
};

MongeAmpereReport monge_ampere_oracle(const CylinderField& vhat, const BoundaryPair& pair,
                                      double bound);

// Convexity at the critical phase: smallest eigenvalue of the scaled operator
// matrix over interior nodes must be positive.
struct ConvexityReport {
  double min_eigenvalue = 0.0;
  bool pass = false;
};

ConvexityReport convexity_check(const CylinderField& vhat, const ChiField& chi);

// Path energy: (1/2) * integral of (du/dt)^2 * Re(e^{-i theta} det(I + i Hx))
// with trapezoid rule in t and the torus average in x. time_span stretches
// the parametrization interval at fixed endpoints (energy scales as 1/span).
struct EnergyReport {
  double value = 0.0;
  double min_weight = 0.0;
  bool weight_warning = false;  // the positive-Lagrangian condition grazed zero
};

EnergyReport energy_functional(const CylinderField& vhat, const BoundaryPair& pair,
                               const PhaseBranch& branch, double time_span = 1.0);

// tau = 0 operator value on the reconstructed u = linear background + vhat,
// per interior node; face rows carry NaN (no equation lives there).
CylinderField degenerate_residual_field(const CylinderField& vhat, const BoundaryPair& pair,
                                        const PhaseBranch& branch);

// Degenerate-operator residual of the reconstructed u^tau = linear background
// + vhat^tau, evaluated at tau = 0 on each sweep entry.
struct ResidualTrendReport {
  std::vector<double> taus;
  std::vector<double> residual_norms;
  bool nonincreasing = false;
  double slope = 0.0;  // log-log against tau when at least two entries exist
  bool insufficient_data = true;
};

ResidualTrendReport geodesic_residual_trend(const SweepResult& sweep, const BoundaryPair& pair,
                                            const PhaseBranch& branch);

// Endpoint admissibility scan plus the sign-symmetry routing instruction.
struct PhaseAdmissibilityReport {
  AdmissibilityReport raw;
  bool use_mirror = false;
  std::string instruction;
};

PhaseAdmissibilityReport phase_admissibility_report(const ChiField& chi,
                                                    const PhaseBranch& branch);
PhaseAdmissibilityReport phase_admissibility_report(const BoundaryPair& pair,
                                                    const PhaseBranch& branch,
                                                    const TorusGrid& space);

// Random-instance agreement of the two independent operator evaluations
// (complex determinant vs sigma_k sums), relative to max(1, magnitude).
struct IdentitySweepReport {
  int instances = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

IdentitySweepReport sigma_det_identity_sweep(std::span<const int> dims, int per_dim,
                                             unsigned seed, double tol);

// arctan_sum_gradient against central finite differences of arctan_sum,
// symmetric-perturbation convention (off-diagonal entries count twice).
struct GradientOracleReport {
  int instances = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

GradientOracleReport gradient_fd_oracle(int instances, int dim, unsigned seed, double tol);

// Finite-difference weights for d-th derivative on integer offsets (unit
// spacing), solved from the Taylor moment system.
std::vector<double> fd_weights(std::span<const int> offsets, int order);

// Least-squares slope of log(y) against log(x); pairs with y <= 0 are
// dropped. Returns 0 when fewer than two usable points remain.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace slg
