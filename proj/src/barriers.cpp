#include "slg/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "slg/errors.hpp"

namespace slg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMarginSlack = 1e-9;

// Space-constant time parabola c/2 * t(t-1) (sign < 0) or c/2 * t(1-t).
CylinderField time_parabola(const CylinderGrid& grid, double coeff, bool negative_bowl) {
  CylinderField f = CylinderField::zeros(grid);
  const long S = grid.space.size();
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    const double val = negative_bowl ? 0.5 * coeff * t * (t - 1.0) : 0.5 * coeff * t * (1.0 - t);
    for (long s = 0; s < S; ++s) f.at(it, s) = val;
  }
  return f;
}

}  // namespace

AdmissibilityReport admissibility_report(const ChiField& chi, const PhaseBranch& branch) {
  const int n = chi.m - 1;
  const double threshold = branch.big_theta - kPi / 2.0;
  const long S = chi.synthetic ? 1 : static_cast<long>(chi.hess0.size()) /
                                         SymmetricMatrix::packed_size(n);

  SymmetricMatrix synth_block(n);
  if (chi.synthetic) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) synth_block.at(i, j) = chi.constant_chi(i + 1, j + 1);
  }

  AdmissibilityReport rep;
  double overall_min = 1e308;
  for (int e = 0; e < 2; ++e) {
    double lo = 1e308;
    double hi = -1e308;
    long arg = 0;
    for (long s = 0; s < S; ++s) {
      const SymmetricMatrix h = chi.synthetic ? synth_block : chi.endpoint_hessian(e, s);
      const double phase = lagrangian_phase_raw(h);
      if (phase < lo) {
        lo = phase;
        arg = s;
      }
      hi = std::max(hi, phase);
    }
    rep.min_phase[e] = lo;
    rep.max_phase[e] = hi;
    int ix[3] = {0, 0, 0};
    if (!chi.synthetic) chi.grid.space.unpack(arg, ix);
    rep.argmin_node[e] = {ix[0], ix[1], ix[2]};
    overall_min = std::min(overall_min, lo);
  }

  rep.delta = 0.5 * (overall_min + kPi / 2.0 - branch.big_theta);
  rep.admissible = overall_min > threshold;
  // Mirror cone: both endpoints strictly below -(n-1) pi/2, so negating the
  // data lands strictly inside the admissible cone.
  const double mirror_threshold = -(branch.big_theta - kPi / 2.0);
  rep.mirror_admissible =
      std::max(rep.max_phase[0], rep.max_phase[1]) < mirror_threshold;
  return rep;
}

double admissibility_margin(const ChiField& chi, const PhaseBranch& branch) {
  const AdmissibilityReport rep = admissibility_report(chi, branch);
  if (!rep.admissible) {
    const int bad = rep.min_phase[0] <= rep.min_phase[1] ? 0 : 1;
    std::ostringstream msg;
    msg << "boundary endpoint u" << bad << " leaves the admissible cone: phase "
        << rep.min_phase[bad] << " <= " << branch.big_theta - kPi / 2.0 << " at node ("
        << rep.argmin_node[bad][0] << "," << rep.argmin_node[bad][1] << ","
        << rep.argmin_node[bad][2] << ")";
    throw AdmissibilityError(msg.str(), bad, rep.argmin_node[bad], rep.min_phase[bad],
                             branch.big_theta - kPi / 2.0);
  }
  return rep.delta;
}

Subsolution build_subsolution(double delta, const ChiField& chi, const PhaseBranch& branch) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw BarrierError("subsolution: admissibility gap must be positive");
  const CylinderGrid& grid = chi.grid;
  const double tau = grid.tau;
  const double target = branch.big_theta + delta;

  // Candidate acceptance on the analytic corner bump lambda/tau; the field
  // built afterwards reproduces the same corner through the time stencil.
  const CylinderField zero = CylinderField::zeros(grid);
  auto margin_at = [&](double lambda) {
    const PhaseFieldResult r = phase_field(zero, chi, lambda / tau);
    double lo = 1e308;
    for (double p : r.phase) lo = std::min(lo, p);
    return lo - target;
  };

  double lambda = tau / std::tan(delta);
  bool ok = false;
  for (int attempt = 0; attempt < 60; ++attempt) {
    if (margin_at(lambda) >= -kMarginSlack) {
      ok = true;
      break;
    }
    lambda *= 2.0;
  }
  if (!ok) throw BarrierError("subsolution: margin not reached by doubling search");

  Subsolution sub;
  for (int attempt = 0; attempt < 2; ++attempt) {
    sub.lambda = lambda;
    sub.field = time_parabola(grid, lambda, true);
    const PhaseFieldResult r = phase_field(sub.field, chi);
    sub.phase = r.phase;
    double lo = 1e308;
    for (double p : sub.phase) lo = std::min(lo, p);
    sub.margin_min = lo - target;
    if (sub.margin_min >= -kMarginSlack) return sub;
    lambda *= 2.0;  // stencil rounding pushed the margin under; one retry
  }
  throw BarrierError("subsolution: stencil margin check failed after doubling");
}

Supersolution build_supersolution(const ChiField& chi) {
  const CylinderGrid& grid = chi.grid;
  const double tau = grid.tau;

  Supersolution sup;
  sup.lambda = tau * std::max(0.0, chi_trace_sup(chi));
  sup.field = time_parabola(grid, sup.lambda, false);

  const double corner = sup.lambda / tau;
  double worst = -1e308;
  const long S = grid.space.size();
  for (int it = 1; it <= grid.time_points - 2; ++it)
    for (long s = 0; s < S; ++s) worst = std::max(worst, chi.at(it, s).trace() - corner);
  sup.trace_margin_max = worst;
  if (worst > kMarginSlack * (1.0 + std::abs(corner)))
    throw BarrierError("supersolution: trace bound violated on the grid");
  return sup;
}

BarrierPair build_barriers(const ChiField& chi, const PhaseBranch& branch) {
  BarrierPair b;
  b.delta = admissibility_margin(chi, branch);
  Subsolution sub = build_subsolution(b.delta, chi, branch);
  Supersolution sup = build_supersolution(chi);
  b.lambda_sub = sub.lambda;
  b.lambda_super = sup.lambda;
  b.v_sub = std::move(sub.field);
  b.v_super = std::move(sup.field);
  b.sub_phase = std::move(sub.phase);
  b.sub_margin_min = sub.margin_min;
  b.super_trace_margin = sup.trace_margin_max;
  return b;
}

SandwichReport check_sandwich(const CylinderField& v, const BarrierPair& barriers) {
  SandwichReport rep;
  rep.lower_clearance = 1e308;
  rep.upper_clearance = 1e308;
  const long total = static_cast<long>(v.values.size());
  for (long k = 0; k < total; ++k) {
    const double lower = v.values[k] - barriers.v_sub.values[k];
    const double upper = barriers.v_super.values[k] - v.values[k];
    if (lower < rep.lower_clearance) {
      rep.lower_clearance = lower;
      if (lower < 0) rep.worst_node = k;
    }
    if (upper < rep.upper_clearance) {
      rep.upper_clearance = upper;
      if (upper < 0) rep.worst_node = k;
    }
  }
  const double slack = 1e-9 * (1.0 + v.max_abs());
  rep.ok = rep.lower_clearance >= -slack && rep.upper_clearance >= -slack;
  return rep;
}

NormalDerivativeReport check_normal_derivatives(const CylinderField& v,
                                                const BarrierPair& barriers) {
  const CylinderGrid& g = v.grid;
  const double dt = g.dt();
  const int T = g.time_points;
  const long S = g.space.size();

  // Second-order one-sided slopes at the faces.
  NormalDerivativeReport rep;
  const double slack =
      0.05 * (barriers.lambda_sub + barriers.lambda_super + 1.0) * dt + 1e-9;
  const double lo0 = -0.5 * barriers.lambda_sub - slack;
  const double hi0 = 0.5 * barriers.lambda_super + slack;
  const double lo1 = -0.5 * barriers.lambda_super - slack;
  const double hi1 = 0.5 * barriers.lambda_sub + slack;

  double worst = 0.0;
  for (long s = 0; s < S; ++s) {
    const double d0 =
        (-3.0 * v.at(0, s) + 4.0 * v.at(1, s) - v.at(2, s)) / (2.0 * dt);
    const double d1 =
        (3.0 * v.at(T - 1, s) - 4.0 * v.at(T - 2, s) + v.at(T - 3, s)) / (2.0 * dt);
    worst = std::max(worst, std::max(lo0 - d0, d0 - hi0));
    worst = std::max(worst, std::max(lo1 - d1, d1 - hi1));
  }
  rep.worst_excess = std::max(0.0, worst);
  rep.within_bounds = worst <= 0.0;
  return rep;
}

}  // namespace slg
