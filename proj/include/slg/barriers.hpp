#pragma once

#include <array>
#include <vector>

#include "slg/fields.hpp"
#include "slg/spectral.hpp"

// Explicit barriers for the continuation solve. Both are space-constant
// parabolas in rescaled time t:
//   v_sub   = (lambda_sub/2)  t(t-1)  <= 0, adds lambda_sub/tau to M(0,0),
//   v_super = (lambda_super/2) t(1-t) >= 0, subtracts lambda_super/tau.
// lambda_sub is found by a doubling search upward from tau/tan(delta) until
// the verified phase margin holds on the grid; lambda_super comes from the
// trace bound. The subsolution's pointwise phase field doubles as the
// continuation anchor.

namespace slg {

// Per-endpoint raw phase statistics and the admissibility gap
//   delta = min over endpoints and nodes of (phase + pi/2 - big_theta) / 2.
struct AdmissibilityReport {
  double delta = 0.0;
  std::array<double, 2> min_phase{};
  std::array<double, 2> max_phase{};
  std::array<std::array<int, 3>, 2> argmin_node{};
  bool admissible = false;
  // True when both endpoints satisfy the mirrored (negative branch) cone
  // condition instead; the caller may then solve the negated problem.
  bool mirror_admissible = false;
};

AdmissibilityReport admissibility_report(const ChiField& chi, const PhaseBranch& branch);

// delta > 0 or throws AdmissibilityError naming the offending endpoint/node.
double admissibility_margin(const ChiField& chi, const PhaseBranch& branch);

struct Subsolution {
  double lambda = 0.0;
  CylinderField field;
  // arctan_sum(chi + D2 v_sub) per interior node, (it-1)*S + s ordering.
  // Computed through the same stencil pipeline as the solver residual, so the
  // zeta = 0 continuation anchor is exact by construction.
  std::vector<double> phase;
  double margin_min = 0.0;  // min(phase) - (big_theta + delta)
};

Subsolution build_subsolution(double delta, const ChiField& chi, const PhaseBranch& branch);

struct Supersolution {
  double lambda = 0.0;
  CylinderField field;
  double trace_margin_max = 0.0;  // max over interior nodes of tr(chi + D2 v_super)
};

Supersolution build_supersolution(const ChiField& chi);

struct BarrierPair {
  double delta = 0.0;
  double lambda_sub = 0.0;
  double lambda_super = 0.0;
  CylinderField v_sub;
  CylinderField v_super;
  std::vector<double> sub_phase;
  double sub_margin_min = 0.0;
  double super_trace_margin = 0.0;
};

BarrierPair build_barriers(const ChiField& chi, const PhaseBranch& branch);

struct SandwichReport {
  bool ok = true;
  // Signed clearances; negative means the bound is violated by that much.
  double lower_clearance = 0.0;  // min(v - v_sub)
  double upper_clearance = 0.0;  // min(v_super - v)
  long worst_node = -1;
};

// Pointwise v_sub <= v <= v_super with slack 1e-9 (1 + |v|_inf).
SandwichReport check_sandwich(const CylinderField& v, const BarrierPair& barriers);

// Face-slope monitor: one-sided dv/dt at the two faces against the barrier
// slopes. Advisory only (discretization error can nudge it), never fatal.
struct NormalDerivativeReport {
  bool within_bounds = true;
  double worst_excess = 0.0;
};

NormalDerivativeReport check_normal_derivatives(const CylinderField& v,
                                                const BarrierPair& barriers);

}  // namespace slg
