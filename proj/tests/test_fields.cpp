#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "slg/errors.hpp"
#include "slg/fields.hpp"
#include "slg/kernels.hpp"
#include "slg/spectral.hpp"

using namespace slg;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PotentialSpec quadratic_potential(int n, double q) {
  PotentialSpec p;
  p.n = n;
  p.quadratic = SymmetricMatrix(n);
  for (int i = 0; i < n; ++i) p.quadratic.at(i, i) = q;
  return p;
}

TrigMode mode1d(int k, double cos_amp, double sin_amp) {
  TrigMode m;
  m.k = {k, 0, 0};
  m.cos_amp = cos_amp;
  m.sin_amp = sin_amp;
  return m;
}

}  // namespace

TEST_CASE("torus grid: strides, wrap, pack/unpack round trip") {
  TorusGrid g{2, 8};
  CHECK(g.size() == 64);
  CHECK(g.stride(0) == 8);
  CHECK(g.stride(1) == 1);

  int ix[3];
  for (long s = 0; s < g.size(); ++s) {
    g.unpack(s, ix);
    CHECK(g.pack(ix) == s);
  }

  // Wrap on both edges of axis 1.
  g.unpack(7, ix);
  CHECK(g.shifted(7, ix, 1, +1) == 0);
  g.unpack(0, ix);
  CHECK(g.shifted(0, ix, 1, -1) == 7);
  // And along axis 0.
  g.unpack(56, ix);
  CHECK(g.shifted(56, ix, 0, +1) == 0);
}

TEST_CASE("grid validation bounds") {
  CHECK_THROWS_AS(TorusGrid({0, 8}).validate(), InputError);
  CHECK_THROWS_AS(TorusGrid({4, 8}).validate(), InputError);
  CHECK_THROWS_AS(TorusGrid({2, 3}).validate(), InputError);
  CHECK_THROWS_AS((CylinderGrid{TorusGrid{1, 8}, 2, 1.0}).validate(), InputError);
  CHECK_THROWS_AS((CylinderGrid{TorusGrid{1, 8}, 9, 0.0}).validate(), InputError);
  CHECK_THROWS_AS((CylinderGrid{TorusGrid{1, 8}, 9, 1.5}).validate(), InputError);
  CHECK_NOTHROW((CylinderGrid{TorusGrid{1, 8}, 9, 0.25}).validate());
}

TEST_CASE("sampled potential matches the analytic formulas at the nodes") {
  PotentialSpec p = quadratic_potential(2, 1.5);
  p.quadratic.at(1, 0) = 0.25;
  p.constant = 0.7;
  TrigMode m;
  m.k = {1, 2, 0};
  m.cos_amp = 0.05;
  m.sin_amp = -0.02;
  p.modes.push_back(m);

  const TorusGrid grid{2, 8};
  const SampledPotential s = sample_potential(p, grid);
  REQUIRE(s.size == grid.size());

  int ix[3];
  for (long idx = 0; idx < grid.size(); ++idx) {
    grid.unpack(idx, ix);
    const double x[2] = {grid.coord(ix[0]), grid.coord(ix[1])};
    CHECK(s.value[static_cast<std::size_t>(idx)] ==
          doctest::Approx(p.value(x)).epsilon(1e-14));
    double g[2];
    p.gradient(x, g);
    for (int a = 0; a < 2; ++a)
      CHECK(s.grad[static_cast<std::size_t>(idx) * 2 + a] ==
            doctest::Approx(g[a]).epsilon(1e-14));
    const SymmetricMatrix h = p.hessian(x);
    const SymmetricMatrix hs = s.hessian_at(idx);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j <= i; ++j)
        CHECK(hs(i, j) == doctest::Approx(h(i, j)).epsilon(1e-13));
  }
}

TEST_CASE("periodic hessian part has exact zero grid mean") {
  // Uniform-grid sums of cos/sin(2 pi k x) vanish exactly for 0 < k < N, so
  // the sampled Hessian averages back to the quadratic part to roundoff.
  PotentialSpec p = quadratic_potential(1, 3.0);
  p.modes.push_back(mode1d(1, 0.05, 0.01));
  p.modes.push_back(mode1d(3, -0.02, 0.0));
  const TorusGrid grid{1, 16};
  const SampledPotential s = sample_potential(p, grid);
  CHECK(periodic_hessian_mean_deviation(s, p.quadratic) <= 1e-12);
}

TEST_CASE("modes at or above the Nyquist limit are rejected") {
  PotentialSpec p = quadratic_potential(1, 2.0);
  p.modes.push_back(mode1d(8, 0.01, 0.0));
  CHECK_THROWS_AS((void)sample_potential(p, TorusGrid{1, 16}), InputError);

  PotentialSpec ok = quadratic_potential(1, 2.0);
  ok.modes.push_back(mode1d(7, 0.01, 0.0));
  CHECK_NOTHROW((void)sample_potential(ok, TorusGrid{1, 16}));

  // Negative wave numbers count by magnitude.
  PotentialSpec neg = quadratic_potential(1, 2.0);
  neg.modes.push_back(mode1d(-8, 0.01, 0.0));
  CHECK_THROWS_AS((void)sample_potential(neg, TorusGrid{1, 16}), InputError);
}

TEST_CASE("potential validation rejects malformed modes") {
  PotentialSpec p = quadratic_potential(1, 1.0);
  p.modes.push_back(mode1d(0, 0.1, 0.0));
  CHECK_THROWS_AS(p.validate(), InputError);

  PotentialSpec axes = quadratic_potential(1, 1.0);
  TrigMode m;
  m.k = {1, 1, 0};  // axis 1 does not exist for n = 1
  m.cos_amp = 0.1;
  axes.modes.push_back(m);
  CHECK_THROWS_AS(axes.validate(), InputError);
}

TEST_CASE("translation equivariance of sampling") {
  // Shifting the argument by one grid node equals rotating the sample array.
  // cos(2 pi k (x + h)) expands into the shifted-amplitude mode.
  const int N = 16;
  const int k = 3;
  const double amp_c = 0.07, amp_s = -0.03;
  const double phi = kTwoPi * k / N;

  PotentialSpec base = quadratic_potential(1, 0.0);
  base.modes.push_back(mode1d(k, amp_c, amp_s));
  PotentialSpec shifted = quadratic_potential(1, 0.0);
  shifted.modes.push_back(mode1d(k, amp_c * std::cos(phi) + amp_s * std::sin(phi),
                                 amp_s * std::cos(phi) - amp_c * std::sin(phi)));

  const TorusGrid grid{1, N};
  const SampledPotential a = sample_potential(base, grid);
  const SampledPotential b = sample_potential(shifted, grid);
  for (long s = 0; s < grid.size(); ++s) {
    const long sp = (s + 1) % N;
    CHECK(b.value[static_cast<std::size_t>(s)] ==
          doctest::Approx(a.value[static_cast<std::size_t>(sp)]).epsilon(1e-13));
  }
}

TEST_CASE("chi assembly: corner, mixed row, interpolated block") {
  const int n = 1;
  PotentialSpec u0 = quadratic_potential(n, 2.0);
  u0.modes.push_back(mode1d(1, 0.05, 0.0));
  PotentialSpec u1 = quadratic_potential(n, 2.0);
  u1.modes.push_back(mode1d(1, -0.05, 0.02));
  const BoundaryPair pair{u0, u1};

  const double tau = 0.25;
  const CylinderGrid grid{TorusGrid{n, 16}, 9, tau};
  const ChiField chi = assemble_chi(pair, grid);
  REQUIRE(chi.m == n + 1);

  const TorusGrid& space = grid.space;
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    for (long s = 0; s < space.size(); ++s) {
      const double x[1] = {space.coord(static_cast<int>(s))};
      const SymmetricMatrix c = chi.at(it, s);

      CHECK(c(0, 0) == 0.0);

      double g0[1], g1[1];
      u0.gradient(x, g0);
      u1.gradient(x, g1);
      CHECK(c(0, 1) == doctest::Approx((g1[0] - g0[0]) / std::sqrt(tau)).epsilon(1e-13));

      const SymmetricMatrix h0 = u0.hessian(x);
      const SymmetricMatrix h1 = u1.hessian(x);
      CHECK(c(1, 1) ==
            doctest::Approx((1.0 - t) * h0(0, 0) + t * h1(0, 0)).epsilon(1e-13));
    }
  }

  // The mixed row scales as 1/sqrt(tau): quartering tau doubles it.
  const CylinderGrid grid4{TorusGrid{n, 16}, 9, tau / 4.0};
  const ChiField chi4 = assemble_chi(pair, grid4);
  CHECK(chi4.at(3, 5)(0, 1) == doctest::Approx(2.0 * chi.at(3, 5)(0, 1)).epsilon(1e-13));
}

TEST_CASE("chi trace sup sits on an endpoint slice") {
  PotentialSpec u0 = quadratic_potential(2, 1.0);
  u0.modes.push_back(TrigMode{{1, 0, 0}, 0.04, 0.0});
  PotentialSpec u1 = quadratic_potential(2, 1.0);
  u1.modes.push_back(TrigMode{{0, 1, 0}, -0.03, 0.01});
  const BoundaryPair pair{u0, u1};
  const CylinderGrid grid{TorusGrid{2, 8}, 9, 1.0};
  const ChiField chi = assemble_chi(pair, grid);

  double end_max = 0.0;
  for (int it : {0, grid.time_points - 1})
    for (long s = 0; s < grid.space.size(); ++s)
      end_max = std::max(end_max, chi.at(it, s).trace());
  CHECK(chi_trace_sup(chi) == doctest::Approx(end_max).epsilon(1e-13));
}

TEST_CASE("synthetic chi: constant matrix verbatim at every node") {
  SymmetricMatrix c(3);
  c.at(0, 0) = 0.5;
  c.at(1, 1) = 2.0;
  c.at(2, 2) = 1.0;
  c.at(1, 0) = 0.3;
  const CylinderGrid grid{TorusGrid{2, 8}, 7, 0.25};
  const ChiField chi = synthetic_chi(c, grid);
  CHECK(chi.synthetic);
  for (int it : {0, 3, 6})
    for (long s : {0L, 17L, 63L}) CHECK(chi.at(it, s) == c);
}

TEST_CASE("scaled hessian: exact on quadratics in the grid coordinates") {
  SymmetricMatrix c(2);
  c.at(0, 0) = 0.0;
  c.at(1, 1) = 2.0;
  const double tau = 0.25;
  const CylinderGrid grid{TorusGrid{1, 16}, 9, tau};
  const ChiField chi = synthetic_chi(c, grid);

  // v = (a/2) t(t-1): the time stencil reproduces v_tt = a exactly, and the
  // operator sees a/tau in the corner.
  const double a = 0.8;
  CylinderField v = CylinderField::zeros(grid);
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    for (long s = 0; s < grid.space.size(); ++s) v.at(it, s) = 0.5 * a * t * (t - 1.0);
  }
  SymmetricMatrix m = scaled_hessian_at(v, chi, 4, 8);
  CHECK(m(0, 0) == doctest::Approx(a / tau).epsilon(1e-12));
  CHECK(m(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::fabs(m(0, 1)) <= 1e-12);

  // v = t * x at nodes away from the wrap seam: the mixed stencil sees
  // d2v/dtdx = 1, scaled by 1/sqrt(tau); the pure-space stencil sees zero.
  for (int it = 0; it < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    for (long s = 0; s < grid.space.size(); ++s)
      v.at(it, s) = t * grid.space.coord(static_cast<int>(s));
  }
  m = scaled_hessian_at(v, chi, 4, 8);
  CHECK(m(0, 1) == doctest::Approx(1.0 / std::sqrt(tau)).epsilon(1e-12));
  CHECK(m(1, 1) == doctest::Approx(2.0).epsilon(1e-12));

  // v = x^2 / 2 away from the seam: spatial second difference is exact.
  for (int it = 0; it < grid.time_points; ++it)
    for (long s = 0; s < grid.space.size(); ++s) {
      const double x = grid.space.coord(static_cast<int>(s));
      v.at(it, s) = 0.5 * x * x;
    }
  m = scaled_hessian_at(v, chi, 4, 8);
  CHECK(m(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::fabs(m(0, 0)) <= 1e-12);
}

TEST_CASE("block assembly matches the scalar path and pads with identity") {
  SymmetricMatrix c(2);
  c.at(0, 0) = 0.1;
  c.at(1, 1) = 1.5;
  c.at(1, 0) = -0.2;
  const CylinderGrid grid{TorusGrid{1, 6}, 7, 0.5};
  const ChiField chi = synthetic_chi(c, grid);

  CylinderField v = CylinderField::zeros(grid);
  for (int it = 0; it < grid.time_points; ++it)
    for (long s = 0; s < grid.space.size(); ++s)
      v.at(it, s) = 0.01 * std::sin(kTwoPi * (it + 2 * s) / 13.0);

  const int m = chi.m;
  const int plen = m * (m + 1) / 2;
  std::vector<double> soa(static_cast<std::size_t>(plen) * kernels::kWidth, 0.0);

  // Base 4 with 6 spatial nodes: lanes 0,1 cover nodes 4,5; lanes 2,3 pad.
  assemble_scaled_hessian_block(v, chi, 3, 4, 2, soa.data());
  for (int l = 0; l < 2; ++l) {
    const SymmetricMatrix ref = scaled_hessian_at(v, chi, 3, 4 + l);
    for (int e = 0; e < plen; ++e)
      CHECK(soa[static_cast<std::size_t>(e) * kernels::kWidth + l] ==
            doctest::Approx(ref.packed()[static_cast<std::size_t>(e)]).epsilon(1e-14));
  }
  const SymmetricMatrix id = SymmetricMatrix::identity(m);
  for (int l = 2; l < kernels::kWidth; ++l)
    for (int e = 0; e < plen; ++e)
      CHECK(soa[static_cast<std::size_t>(e) * kernels::kWidth + l] ==
            id.packed()[static_cast<std::size_t>(e)]);
}

TEST_CASE("phase field on a synthetic constant operator") {
  SymmetricMatrix c(2);
  c.at(0, 0) = 0.5;
  c.at(1, 1) = 1.0;
  const CylinderGrid grid{TorusGrid{1, 8}, 7, 1.0};
  const ChiField chi = synthetic_chi(c, grid);
  const CylinderField v = CylinderField::zeros(grid);

  const PhaseFieldResult r = phase_field(v, chi);
  REQUIRE(static_cast<long>(r.phase.size()) == grid.interior_count());
  const double want = std::atan(0.5) + std::atan(1.0);
  for (double p : r.phase) CHECK(p == doctest::Approx(want).epsilon(1e-13));
  CHECK(r.min_eigenvalue == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.max_abs_eigenvalue == doctest::Approx(1.0).epsilon(1e-12));

  // A corner bump shifts the (0,0) entry before the eigensolve.
  const PhaseFieldResult rb = phase_field(v, chi, 0.25);
  const double want_b = std::atan(0.75) + std::atan(1.0);
  for (double p : rb.phase) CHECK(p == doctest::Approx(want_b).epsilon(1e-13));
}

TEST_CASE("cylinder field norms") {
  const CylinderGrid grid{TorusGrid{1, 4}, 3, 1.0};
  CylinderField f = CylinderField::zeros(grid);
  f.at(1, 2) = -0.75;
  f.at(2, 0) = 0.5;
  CHECK(f.max_abs() == doctest::Approx(0.75).epsilon(1e-15));

  // Steepest quotient: the face difference (f(1,2) - f(0,2)) / dt with
  // dt = 1/2 gives |-0.75| * 2 = 1.5; no spatial quotient beats it
  // (central spatial quotients reach (0.75) / (2/4) = 1.5 as well).
  CHECK(f.max_abs_gradient() == doctest::Approx(1.5).epsilon(1e-13));
}
