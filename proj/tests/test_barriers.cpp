#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "slg/barriers.hpp"
#include "slg/errors.hpp"
#include "slg/fields.hpp"
#include "slg/spectral.hpp"

using namespace slg;

namespace {

constexpr double kPi = std::numbers::pi;

BoundaryPair constant_pair(int n, double q) {
  PotentialSpec p;
  p.n = n;
  p.quadratic = SymmetricMatrix(n);
  for (int i = 0; i < n; ++i) p.quadratic.at(i, i) = q;
  return BoundaryPair{p, p};
}

ChiField constant_chi(int n, double q, double tau = 1.0, int N = 8, int T = 9) {
  const CylinderGrid grid{TorusGrid{n, N}, T, tau};
  return assemble_chi(constant_pair(n, q), grid);
}

}  // namespace

TEST_CASE("admissibility gap: closed form for constant Hessian 2I") {
  // Both endpoints have raw phase 2 arctan 2; the gap against the critical
  // threshold pi/2 halves to arctan(1/3).
  const ChiField chi = constant_chi(2, 2.0);
  const AdmissibilityReport rep = admissibility_report(chi, select_branch(2));
  CHECK(rep.admissible);
  CHECK_FALSE(rep.mirror_admissible);
  const double want = 0.5 * (2.0 * std::atan(2.0) - kPi / 2.0);
  CHECK(rep.delta == doctest::Approx(want).epsilon(1e-14));
  CHECK(rep.delta == doctest::Approx(std::atan(1.0 / 3.0)).epsilon(1e-14));
  for (int e : {0, 1}) {
    CHECK(rep.min_phase[static_cast<std::size_t>(e)] ==
          doctest::Approx(2.0 * std::atan(2.0)).epsilon(1e-14));
    CHECK(rep.max_phase[static_cast<std::size_t>(e)] ==
          doctest::Approx(2.0 * std::atan(2.0)).epsilon(1e-14));
  }
}

TEST_CASE("admissibility gap grows with the Hessian") {
  const double d1 = admissibility_report(constant_chi(2, 2.0), select_branch(2)).delta;
  const double d2 = admissibility_report(constant_chi(2, 2.5), select_branch(2)).delta;
  CHECK(d2 > d1);
  CHECK(d2 == doctest::Approx(std::atan(2.5) - kPi / 4.0).epsilon(1e-13));
}

TEST_CASE("cone boundary: identity Hessian fails both branches") {
  const AdmissibilityReport rep = admissibility_report(constant_chi(2, 1.0), select_branch(2));
  CHECK_FALSE(rep.admissible);
  CHECK_FALSE(rep.mirror_admissible);

  CHECK_THROWS_AS((void)admissibility_margin(constant_chi(2, 1.0), select_branch(2)),
                  AdmissibilityError);
  try {
    (void)admissibility_margin(constant_chi(2, 1.0), select_branch(2));
  } catch (const AdmissibilityError& e) {
    CHECK(e.phase() == doctest::Approx(kPi / 2.0).epsilon(1e-13));
    CHECK(e.threshold() == doctest::Approx(kPi / 2.0).epsilon(1e-13));
    CHECK((e.endpoint() == 0 || e.endpoint() == 1));
  }
}

TEST_CASE("mirror cone: negative definite endpoints route to the negated problem") {
  const AdmissibilityReport rep = admissibility_report(constant_chi(2, -2.0), select_branch(2));
  CHECK_FALSE(rep.admissible);
  CHECK(rep.mirror_admissible);
  CHECK(rep.max_phase[0] == doctest::Approx(-2.0 * std::atan(2.0)).epsilon(1e-13));
}

TEST_CASE("admissibility scans spatially varying endpoints") {
  PotentialSpec u0;
  u0.n = 1;
  u0.quadratic = SymmetricMatrix(1);
  u0.quadratic.at(0, 0) = 3.0;
  TrigMode m;
  m.k = {1, 0, 0};
  m.cos_amp = 0.02;
  u0.modes.push_back(m);
  const BoundaryPair pair{u0, u0};
  const CylinderGrid grid{TorusGrid{1, 16}, 5, 1.0};
  const ChiField chi = assemble_chi(pair, grid);
  const AdmissibilityReport rep = admissibility_report(chi, select_branch(1));
  CHECK(rep.admissible);

  double lo = 1e308, hi = -1e308;
  for (long s = 0; s < grid.space.size(); ++s) {
    const double x = grid.space.coord(static_cast<int>(s));
    const double h = 3.0 - 0.02 * 4.0 * kPi * kPi * std::cos(2.0 * kPi * x);
    lo = std::min(lo, std::atan(h));
    hi = std::max(hi, std::atan(h));
  }
  CHECK(rep.min_phase[0] == doctest::Approx(lo).epsilon(1e-12));
  CHECK(rep.max_phase[1] == doctest::Approx(hi).epsilon(1e-12));
}

TEST_CASE("subsolution: tangent-start candidate is exact for constant 2I") {
  // arctan 3 + 2 arctan 2 = pi + arctan(1/3): the first candidate
  // lambda = tau / tan(delta) = 3 meets the margin with equality.
  const ChiField chi = constant_chi(2, 2.0);
  const PhaseBranch branch = select_branch(2);
  const double delta = admissibility_margin(chi, branch);
  const Subsolution sub = build_subsolution(delta, chi, branch);
  CHECK(sub.lambda == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sub.margin_min >= -1e-9);
  CHECK(std::fabs(sub.margin_min) <= 1e-12);

  // Space-constant parabola (lambda/2) t(t-1); minimum -lambda/8 at t = 1/2.
  const CylinderGrid& grid = chi.grid;
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    const double want = 0.5 * sub.lambda * t * (t - 1.0);
    CHECK(sub.field.at(it, 0) == doctest::Approx(want).epsilon(1e-14));
    CHECK(sub.field.at(it, 17) == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(sub.field.max_abs() == doctest::Approx(sub.lambda / 8.0).epsilon(1e-13));

  CHECK_THROWS_AS((void)build_subsolution(0.0, chi, branch), BarrierError);
}

TEST_CASE("subsolution scales with tau") {
  // Same data at tau = 1/4: the corner bump lambda/tau must reach the same
  // phase, so lambda shrinks by the same factor of 4.
  const ChiField chi = constant_chi(2, 2.0, 0.25);
  const PhaseBranch branch = select_branch(2);
  const Subsolution sub = build_subsolution(admissibility_margin(chi, branch), chi, branch);
  CHECK(sub.lambda == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("supersolution: trace bound with zero slack for constant data") {
  // tr chi = 2 q for the constant pair; lambda_super = tau * sup tr chi and
  // the margin max lands exactly at zero.
  const ChiField chi = constant_chi(2, 2.0);
  const Supersolution sup = build_supersolution(chi);
  CHECK(sup.lambda == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(std::fabs(sup.trace_margin_max) <= 1e-12);
  CHECK(sup.field.max_abs() == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(sup.field.at(4, 0) > 0.0);
}

TEST_CASE("barrier pair: ordering and sandwich") {
  const ChiField chi = constant_chi(2, 2.0);
  const BarrierPair b = build_barriers(chi, select_branch(2));
  CHECK(b.delta == doctest::Approx(std::atan(1.0 / 3.0)).epsilon(1e-13));
  CHECK(b.lambda_sub == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(b.lambda_super == doctest::Approx(4.0).epsilon(1e-12));

  const CylinderField zero = CylinderField::zeros(chi.grid);
  const SandwichReport mid = check_sandwich(zero, b);
  CHECK(mid.ok);
  CHECK(mid.lower_clearance >= 0.0);
  CHECK(mid.upper_clearance >= 0.0);

  // The barriers themselves sit exactly on their own bounds.
  CHECK(check_sandwich(b.v_sub, b).ok);
  CHECK(check_sandwich(b.v_super, b).ok);

  // A field poking above the supersolution is flagged with a signed gap.
  CylinderField high = b.v_super;
  high.at(4, 3) += 0.25;
  const SandwichReport bad = check_sandwich(high, b);
  CHECK_FALSE(bad.ok);
  CHECK(bad.upper_clearance == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(bad.worst_node == chi.grid.node_index(4, 3));

  // And one dipping under the subsolution.
  CylinderField low = b.v_sub;
  low.at(2, 5) -= 0.125;
  const SandwichReport under = check_sandwich(low, b);
  CHECK_FALSE(under.ok);
  CHECK(under.lower_clearance == doctest::Approx(-0.125).epsilon(1e-12));
}

TEST_CASE("normal derivative monitor") {
  const ChiField chi = constant_chi(2, 2.0);
  const BarrierPair b = build_barriers(chi, select_branch(2));

  const CylinderField zero = CylinderField::zeros(chi.grid);
  CHECK(check_normal_derivatives(zero, b).within_bounds);

  // A parabola steeper than the subsolution slope violates the face bound.
  CylinderField steep = CylinderField::zeros(chi.grid);
  const double c = 2.5 * b.lambda_sub;
  for (int it = 0; it < chi.grid.time_points; ++it) {
    const double t = chi.grid.time_of(it);
    for (long s = 0; s < chi.grid.space.size(); ++s)
      steep.at(it, s) = 0.5 * c * t * (t - 1.0);
  }
  const NormalDerivativeReport rep = check_normal_derivatives(steep, b);
  CHECK_FALSE(rep.within_bounds);
  CHECK(rep.worst_excess > 0.0);
}
