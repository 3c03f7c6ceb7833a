#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "slg/errors.hpp"
#include "slg/verify.hpp"

namespace slg {
namespace {

// Tiny dense solve for the Taylor moment system (partial pivoting).
void gauss_solve(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int col = 0; col < n; ++col) {
    int p = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a[static_cast<std::size_t>(r) * n + col]) >
          std::fabs(a[static_cast<std::size_t>(p) * n + col]))
        p = r;
    if (p != col) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<std::size_t>(col) * n + c],
                  a[static_cast<std::size_t>(p) * n + c]);
      std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(p)]);
    }
    const double piv = a[static_cast<std::size_t>(col) * n + col];
    if (piv == 0.0) throw InputError("degenerate stencil offsets");
    for (int r = col + 1; r < n; ++r) {
      const double f = a[static_cast<std::size_t>(r) * n + col] / piv;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double acc = b[static_cast<std::size_t>(col)];
    for (int c = col + 1; c < n; ++c)
      acc -= a[static_cast<std::size_t>(col) * n + c] * b[static_cast<std::size_t>(c)];
    b[static_cast<std::size_t>(col)] = acc / a[static_cast<std::size_t>(col) * n + col];
  }
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Spatial Hessian of the periodic field slice by central differences.
SymmetricMatrix periodic_spatial_hessian(const CylinderField& f, int it, long s) {
  const TorusGrid& g = f.grid.space;
  const int n = g.n;
  const double h = g.spacing();
  const double inv_h2 = 1.0 / (h * h);
  const double inv_4h2 = inv_h2 / 4.0;
  int ix[3];
  g.unpack(s, ix);
  SymmetricMatrix m(n);
  const double center = f.at(it, s);
  for (int a = 0; a < n; ++a) {
    const long sp = g.shifted(s, ix, a, 1);
    const long sm = g.shifted(s, ix, a, -1);
    m.at(a, a) = (f.at(it, sp) - 2.0 * center + f.at(it, sm)) * inv_h2;
    for (int b = a + 1; b < n; ++b) {
      int ixp[3], ixm[3];
      g.unpack(sp, ixp);
      g.unpack(sm, ixm);
      const double pp = f.at(it, g.shifted(sp, ixp, b, 1));
      const double pm = f.at(it, g.shifted(sp, ixp, b, -1));
      const double mp = f.at(it, g.shifted(sm, ixm, b, 1));
      const double mm = f.at(it, g.shifted(sm, ixm, b, -1));
      m.at(a, b) = (pp - pm - mp + mm) * inv_4h2;
    }
  }
  return m;
}

}  // namespace

std::vector<double> fd_weights(std::span<const int> offsets, int order) {
  const int n = static_cast<int>(offsets.size());
  if (order < 0 || order >= n) throw InputError("stencil too short for requested derivative");
  // Moment conditions: sum_j w_j o_j^k / k! = [k == order], k = 0..n-1.
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(k) * n + j] =
          std::pow(static_cast<double>(offsets[static_cast<std::size_t>(j)]), k) / factorial(k);
    b[static_cast<std::size_t>(k)] = k == order ? 1.0 : 0.0;
  }
  gauss_solve(a, b, n);
  return b;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) return 0.0;
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (count * sxy - sx * sy) / denom;
}

ArrowAsymptoticsReport arrow_asymptotics_check(std::span<const double> lambda_prime,
                                               std::span<const double> a_vec,
                                               std::span<const double> a_values,
                                               std::span<const double> tau_values) {
  const int n = static_cast<int>(lambda_prime.size());
  if (static_cast<int>(a_vec.size()) != n) throw InputError("a_vec length mismatch");
  if (a_values.empty() || tau_values.empty()) throw InputError("empty asymptotics table");

  std::vector<double> sorted_prime(lambda_prime.begin(), lambda_prime.end());
  std::sort(sorted_prime.begin(), sorted_prime.end());

  ArrowAsymptoticsReport rep;
  rep.a_values.assign(a_values.begin(), a_values.end());
  rep.tau_values.assign(tau_values.begin(), tau_values.end());
  rep.corner_ok = true;

  std::vector<double> worst_dev_per_a;
  for (double a : a_values) {
    std::vector<double> devs, rels;
    double worst = 0.0;
    for (double tau : tau_values) {
      SymmetricMatrix m(n + 1);
      m.at(0, 0) = a / tau;
      const double inv_sqrt_tau = 1.0 / std::sqrt(tau);
      for (int i = 0; i < n; ++i) {
        m.at(0, i + 1) = a_vec[static_cast<std::size_t>(i)] * inv_sqrt_tau;
        m.at(i + 1, i + 1) = lambda_prime[static_cast<std::size_t>(i)];
      }
      const std::vector<double> ev = eigenvalues(m);
      double dev = 0.0;
      for (int i = 0; i < n; ++i)
        dev = std::max(dev, std::fabs(ev[static_cast<std::size_t>(i)] -
                                      sorted_prime[static_cast<std::size_t>(i)]));
      const double rel = std::fabs(ev[static_cast<std::size_t>(n)] * tau / a - 1.0);
      devs.push_back(dev);
      rels.push_back(rel);
      worst = std::max(worst, dev);
      if (!(rel <= 10.0 / a)) rep.corner_ok = false;
    }
    rep.small_deviation.push_back(std::move(devs));
    rep.corner_rel_error.push_back(std::move(rels));
    worst_dev_per_a.push_back(worst);
  }

  const double max_dev =
      *std::max_element(worst_dev_per_a.begin(), worst_dev_per_a.end());
  if (max_dev <= 1e-13) {
    // Block-diagonal (a_vec = 0) degenerates to exact equality.
    rep.deviation_slope = -1.0;
    rep.slope_ok = true;
  } else {
    rep.deviation_slope = loglog_slope(rep.a_values, worst_dev_per_a);
    rep.slope_ok = std::fabs(rep.deviation_slope + 1.0) <= 0.2;
  }
  rep.pass = rep.slope_ok && rep.corner_ok;
  return rep;
}

MongeAmpereReport monge_ampere_oracle(const CylinderField& vhat, const BoundaryPair& pair,
                                      double bound) {
  const CylinderGrid& grid = vhat.grid;
  if (pair.u0.n != 1 || grid.space.n != 1)
    throw InputError("Monge-Ampere oracle is defined for n = 1 only");
  if (grid.time_points < 7)
    throw InputError("time grid too coarse for the fourth-order oracle");

  const int nspace = static_cast<int>(grid.space.size());
  const double h = grid.space.spacing();
  const double dt = grid.dt();
  const double tau = grid.tau;
  const double inv_sqrt_tau = 1.0 / std::sqrt(tau);

  static const int offs[5] = {-2, -1, 0, 1, 2};
  const std::vector<double> d1 = fd_weights(offs, 1);
  const std::vector<double> d2 = fd_weights(offs, 2);

  // Analytic background pieces per spatial node.
  std::vector<double> dgrad(static_cast<std::size_t>(nspace));
  std::vector<double> h0(static_cast<std::size_t>(nspace)), h1(static_cast<std::size_t>(nspace));
  for (int ix = 0; ix < nspace; ++ix) {
    const double x = grid.space.coord(ix);
    double g0 = 0.0, g1 = 0.0;
    pair.u0.gradient(&x, &g0);
    pair.u1.gradient(&x, &g1);
    dgrad[static_cast<std::size_t>(ix)] = g1 - g0;
    h0[static_cast<std::size_t>(ix)] = pair.u0.hessian(&x).at(0, 0);
    h1[static_cast<std::size_t>(ix)] = pair.u1.hessian(&x).at(0, 0);
  }

  MongeAmpereReport rep;
  rep.bound = bound;
  for (int it = 2; it + 2 < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    for (int ix = 0; ix < nspace; ++ix) {
      double vtt = 0.0, vxx = 0.0, vtx = 0.0;
      for (int j = 0; j < 5; ++j) {
        vtt += d2[static_cast<std::size_t>(j)] * vhat.at(it + offs[j], ix);
        vxx += d2[static_cast<std::size_t>(j)] *
               vhat.at(it, (ix + offs[j] + 2 * nspace) % nspace);
      }
      for (int jt = 0; jt < 5; ++jt)
        for (int jx = 0; jx < 5; ++jx)
          vtx += d1[static_cast<std::size_t>(jt)] * d1[static_cast<std::size_t>(jx)] *
                 vhat.at(it + offs[jt], (ix + offs[jx] + 2 * nspace) % nspace);
      vtt /= dt * dt;
      vxx /= h * h;
      vtx /= dt * h;

      const double m00 = vtt / tau;
      const double m01 = (dgrad[static_cast<std::size_t>(ix)] + vtx) * inv_sqrt_tau;
      const double m11 = (1.0 - t) * h0[static_cast<std::size_t>(ix)] +
                         t * h1[static_cast<std::size_t>(ix)] + vxx;
      const double dev = std::fabs(m00 * m11 - m01 * m01 - 1.0);
      if (dev > rep.max_deviation) {
        rep.max_deviation = dev;
        rep.worst_node = grid.node_index(it, ix);
      }
    }
  }
  rep.pass = rep.max_deviation <= bound;
  return rep;
}

ConvexityReport convexity_check(const CylinderField& vhat, const ChiField& chi) {
  const PhaseFieldResult ph = phase_field(vhat, chi);
  return ConvexityReport{ph.min_eigenvalue, ph.min_eigenvalue > 0.0};
}

EnergyReport energy_functional(const CylinderField& vhat, const BoundaryPair& pair,
                               const PhaseBranch& branch, double time_span) {
  const CylinderGrid& grid = vhat.grid;
  if (!(time_span > 0.0)) throw InputError("time span must be positive");
  const long nspace = grid.space.size();
  const int tpoints = grid.time_points;
  const double dt = grid.dt();

  const SampledPotential s0 = sample_potential(pair.u0, grid.space);
  const SampledPotential s1 = sample_potential(pair.u1, grid.space);

  EnergyReport rep;
  rep.min_weight = 1e308;
  double total = 0.0;
  for (int it = 0; it < tpoints; ++it) {
    const double t = grid.time_of(it);
    const double trap = (it == 0 || it + 1 == tpoints) ? 0.5 : 1.0;
    double slice = 0.0;
    for (long s = 0; s < nspace; ++s) {
      double vt;
      if (it == 0)
        vt = (-3.0 * vhat.at(0, s) + 4.0 * vhat.at(1, s) - vhat.at(2, s)) / (2.0 * dt);
      else if (it + 1 == tpoints)
        vt = (3.0 * vhat.at(it, s) - 4.0 * vhat.at(it - 1, s) + vhat.at(it - 2, s)) /
             (2.0 * dt);
      else
        vt = (vhat.at(it + 1, s) - vhat.at(it - 1, s)) / (2.0 * dt);
      const double ut = (s1.value[static_cast<std::size_t>(s)] -
                         s0.value[static_cast<std::size_t>(s)] + vt) /
                        time_span;

      SymmetricMatrix hess = s0.hessian_at(s);
      hess.scale(1.0 - t);
      hess.add_scaled(s1.hessian_at(s), t);
      hess.add_scaled(periodic_spatial_hessian(vhat, it, s), 1.0);

      const std::vector<double> ev = eigenvalues(hess);
      std::complex<double> det(1.0, 0.0);
      for (double lam : ev) det *= std::complex<double>(1.0, lam);
      const double weight =
          std::real(std::exp(std::complex<double>(0.0, -branch.theta)) * det);
      rep.min_weight = std::min(rep.min_weight, weight);
      slice += ut * ut * weight;
    }
    total += trap * (slice / static_cast<double>(nspace));
  }
  rep.value = 0.5 * total * dt * time_span;
  rep.weight_warning = rep.min_weight < 0.0;
  return rep;
}

CylinderField degenerate_residual_field(const CylinderField& vhat, const BoundaryPair& pair,
                                        const PhaseBranch& branch) {
  const CylinderGrid& grid = vhat.grid;
  const TorusGrid& space = grid.space;
  const int n = space.n;
  const long nspace = space.size();
  const double dt = grid.dt();
  const double h = space.spacing();

  // Analytic background: gradient of (u1 - u0) and endpoint Hessians.
  std::vector<double> dgrad(static_cast<std::size_t>(nspace) * n);
  std::vector<SymmetricMatrix> hess0, hess1;
  hess0.reserve(static_cast<std::size_t>(nspace));
  hess1.reserve(static_cast<std::size_t>(nspace));
  {
    int ix[3];
    double x[3], g0[3], g1[3];
    for (long s = 0; s < nspace; ++s) {
      space.unpack(s, ix);
      for (int a = 0; a < n; ++a) x[a] = space.coord(ix[a]);
      pair.u0.gradient(x, g0);
      pair.u1.gradient(x, g1);
      for (int a = 0; a < n; ++a)
        dgrad[static_cast<std::size_t>(s) * n + a] = g1[a] - g0[a];
      hess0.push_back(pair.u0.hessian(x));
      hess1.push_back(pair.u1.hessian(x));
    }
  }

  CylinderField out = CylinderField::zeros(grid);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (long s = 0; s < nspace; ++s) {
    out.at(0, s) = nan;
    out.at(grid.time_points - 1, s) = nan;
  }
  int ix[3];
  double grad_ut[3];
  for (int it = 1; it + 1 < grid.time_points; ++it) {
    const double t = grid.time_of(it);
    for (long s = 0; s < nspace; ++s) {
      space.unpack(s, ix);
      const double u_tt =
          (vhat.at(it + 1, s) - 2.0 * vhat.at(it, s) + vhat.at(it - 1, s)) / (dt * dt);
      for (int a = 0; a < n; ++a) {
        const long sp = space.shifted(s, ix, a, 1);
        const long sm = space.shifted(s, ix, a, -1);
        grad_ut[a] = dgrad[static_cast<std::size_t>(s) * n + a] +
                     (vhat.at(it + 1, sp) - vhat.at(it + 1, sm) - vhat.at(it - 1, sp) +
                      vhat.at(it - 1, sm)) /
                         (4.0 * dt * h);
      }
      SymmetricMatrix hess = hess0[static_cast<std::size_t>(s)];
      hess.scale(1.0 - t);
      hess.add_scaled(hess1[static_cast<std::size_t>(s)], t);
      hess.add_scaled(periodic_spatial_hessian(vhat, it, s), 1.0);

      out.at(it, s) = geodesic_operator_sigma(
          u_tt, std::span<const double>(grad_ut, static_cast<std::size_t>(n)), hess, 0.0,
          branch);
    }
  }
  return out;
}

ResidualTrendReport geodesic_residual_trend(const SweepResult& sweep, const BoundaryPair& pair,
                                            const PhaseBranch& branch) {
  ResidualTrendReport rep;
  for (const TauRecord& rec : sweep.records) {
    if (!rec.success) continue;
    const CylinderField r = degenerate_residual_field(rec.vhat, pair, branch);
    double norm = 0.0;
    for (int it = 1; it + 1 < r.grid.time_points; ++it)
      for (long s = 0; s < r.grid.space.size(); ++s)
        norm = std::max(norm, std::fabs(r.at(it, s)));
    rep.taus.push_back(rec.tau);
    rep.residual_norms.push_back(norm);
  }

  rep.insufficient_data = rep.taus.size() < 2;
  if (!rep.insufficient_data) {
    rep.nonincreasing = true;
    for (std::size_t k = 0; k + 1 < rep.residual_norms.size(); ++k)
      if (rep.residual_norms[k + 1] > rep.residual_norms[k] * (1.0 + 1e-9))
        rep.nonincreasing = false;
    rep.slope = loglog_slope(rep.taus, rep.residual_norms);
  }
  return rep;
}

IdentitySweepReport sigma_det_identity_sweep(std::span<const int> dims, int per_dim,
                                             unsigned seed, double tol) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_real_distribution<double> small(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  IdentitySweepReport rep;
  for (int n : dims) {
    const PhaseBranch branch = select_branch(n);
    for (int k = 0; k < per_dim; ++k) {
      const double u_tt = coeff(rng);
      double grad[8];
      for (int a = 0; a < n; ++a) grad[a] = small(rng);
      SymmetricMatrix hess(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) hess.at(i, j) = i == j ? coeff(rng) : small(rng);
      // tau cycles through the degenerate limit, the identity point, and a
      // random interior value.
      const double tau = k % 3 == 0 ? 0.0 : (k % 3 == 1 ? 1.0 : unit(rng));

      const std::span<const double> g(grad, static_cast<std::size_t>(n));
      const double via_det = geodesic_operator_det(u_tt, g, hess, tau, branch);
      const double via_sigma = geodesic_operator_sigma(u_tt, g, hess, tau, branch);
      const double rel =
          std::fabs(via_det - via_sigma) / std::max(1.0, std::fabs(via_det));
      rep.max_rel_error = std::max(rep.max_rel_error, rel);
      ++rep.instances;
    }
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

GradientOracleReport gradient_fd_oracle(int instances, int dim, unsigned seed, double tol) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const double eps = 1e-6;

  GradientOracleReport rep;
  for (int k = 0; k < instances; ++k) {
    SymmetricMatrix a(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j <= i; ++j) a.at(i, j) = entry(rng);
    const SymmetricMatrix g = arctan_sum_gradient(a);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j <= i; ++j) {
        SymmetricMatrix ap = a, am = a;
        ap.at(i, j) += eps;
        am.at(i, j) -= eps;
        const double fd = (arctan_sum(ap) - arctan_sum(am)) / (2.0 * eps);
        // Symmetric perturbation moves both (i,j) and (j,i).
        const double expected = i == j ? g(i, j) : 2.0 * g(i, j);
        const double rel = std::fabs(fd - expected) / std::max(1.0, std::fabs(expected));
        rep.max_rel_error = std::max(rep.max_rel_error, rel);
      }
    }
    ++rep.instances;
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

PhaseAdmissibilityReport phase_admissibility_report(const ChiField& chi,
                                                    const PhaseBranch& branch) {
  PhaseAdmissibilityReport rep;
  rep.raw = admissibility_report(chi, branch);
  rep.use_mirror = !rep.raw.admissible && rep.raw.mirror_admissible;
  if (rep.raw.admissible)
    rep.instruction = "admissible on the positive branch";
  else if (rep.use_mirror)
    rep.instruction = "negate both endpoint potentials, solve, then negate the solution";
  else
    rep.instruction = "inadmissible on both branches";
  return rep;
}

PhaseAdmissibilityReport phase_admissibility_report(const BoundaryPair& pair,
                                                    const PhaseBranch& branch,
                                                    const TorusGrid& space) {
  CylinderGrid grid;
  grid.space = space;
  grid.time_points = 3;
  grid.tau = 1.0;
  return phase_admissibility_report(assemble_chi(pair, grid), branch);
}

}  // namespace slg
