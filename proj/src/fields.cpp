#include "slg/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slg/errors.hpp"
#include "slg/kernels.hpp"

namespace slg {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void TorusGrid::validate() const {
  if (n < 1 || n > 3) throw InputError("grid: spatial dimension must be 1, 2, or 3");
  if (points_per_axis < 4) throw InputError("grid: need at least 4 points per axis");
}

void CylinderGrid::validate() const {
  space.validate();
  if (time_points < 3) throw InputError("grid: need at least 3 time points");
  if (!(tau > 0.0 && tau <= 1.0) || !std::isfinite(tau))
    throw InputError("grid: tau must lie in (0, 1]");
}

double CylinderField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double CylinderField::max_abs_gradient() const {
  const long S = grid.space.size();
  const int T = grid.time_points;
  const double inv_dt = 1.0 / grid.dt();
  const double inv_2dt = 0.5 * inv_dt;
  const double inv_2h = 0.5 / grid.space.spacing();

  double m = 0.0;
  int ix[3];
  for (int it = 0; it < T; ++it) {
    for (long s = 0; s < S; ++s) {
      double dtv;
      if (it == 0)
        dtv = (at(1, s) - at(0, s)) * inv_dt;
      else if (it == T - 1)
        dtv = (at(T - 1, s) - at(T - 2, s)) * inv_dt;
      else
        dtv = (at(it + 1, s) - at(it - 1, s)) * inv_2dt;
      m = std::max(m, std::abs(dtv));

      grid.space.unpack(s, ix);
      for (int a = 0; a < grid.space.n; ++a) {
        const long sp = grid.space.shifted(s, ix, a, +1);
        const long sm = grid.space.shifted(s, ix, a, -1);
        m = std::max(m, std::abs((at(it, sp) - at(it, sm)) * inv_2h));
      }
    }
  }
  return m;
}

void PotentialSpec::validate() const {
  if (n < 1 || n > 3) throw InputError("potential: dimension must be 1, 2, or 3");
  if (quadratic.dim() != n) throw InputError("potential: quadratic part has wrong dimension");
  if (!quadratic.finite() || !std::isfinite(constant))
    throw InputError("potential: non-finite coefficients");
  for (const TrigMode& mode : modes) {
    bool all_zero = true;
    for (int a = 0; a < n; ++a)
      if (mode.k[a] != 0) all_zero = false;
    for (int a = n; a < 3; ++a)
      if (mode.k[a] != 0) throw InputError("potential: mode uses axes beyond the dimension");
    if (all_zero) throw InputError("potential: mode with zero wave vector");
    if (!std::isfinite(mode.cos_amp) || !std::isfinite(mode.sin_amp))
      throw InputError("potential: non-finite mode amplitude");
  }
}

double PotentialSpec::value(const double* x) const {
  double v = constant;
  for (int i = 0; i < n; ++i) {
    v += 0.5 * quadratic(i, i) * x[i] * x[i];
    for (int j = 0; j < i; ++j) v += quadratic(i, j) * x[i] * x[j];
  }
  for (const TrigMode& mode : modes) {
    double phase = 0.0;
    for (int a = 0; a < n; ++a) phase += mode.k[a] * x[a];
    phase *= kTwoPi;
    v += mode.cos_amp * std::cos(phase) + mode.sin_amp * std::sin(phase);
  }
  return v;
}

void PotentialSpec::gradient(const double* x, double* g) const {
  for (int i = 0; i < n; ++i) {
    double gi = 0.0;
    for (int j = 0; j < n; ++j) gi += quadratic(i, j) * x[j];
    g[i] = gi;
  }
  for (const TrigMode& mode : modes) {
    double phase = 0.0;
    for (int a = 0; a < n; ++a) phase += mode.k[a] * x[a];
    phase *= kTwoPi;
    const double d = kTwoPi * (-mode.cos_amp * std::sin(phase) + mode.sin_amp * std::cos(phase));
    for (int a = 0; a < n; ++a) g[a] += d * mode.k[a];
  }
}

SymmetricMatrix PotentialSpec::hessian(const double* x) const {
  SymmetricMatrix h = quadratic;
  for (const TrigMode& mode : modes) {
    double phase = 0.0;
    for (int a = 0; a < n; ++a) phase += mode.k[a] * x[a];
    phase *= kTwoPi;
    const double d =
        kTwoPi * kTwoPi * (-mode.cos_amp * std::cos(phase) - mode.sin_amp * std::sin(phase));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) h.at(i, j) += d * mode.k[i] * mode.k[j];
  }
  return h;
}

void BoundaryPair::validate() const {
  u0.validate();
  u1.validate();
  if (u0.n != u1.n) throw InputError("boundary pair: dimension mismatch");
  if (!(u0.quadratic == u1.quadratic))
    throw InputError("boundary pair: endpoints must share the quadratic part");
}

SymmetricMatrix SampledPotential::hessian_at(long s) const {
  const int np = SymmetricMatrix::packed_size(n);
  SymmetricMatrix h(n);
  auto packed = h.packed();
  for (int e = 0; e < np; ++e) packed[e] = hess_packed[s * np + e];
  return h;
}

SampledPotential sample_potential(const PotentialSpec& spec, const TorusGrid& grid) {
  spec.validate();
  grid.validate();
  if (spec.n != grid.n) throw InputError("sample_potential: dimension mismatch");
  for (const TrigMode& mode : spec.modes)
    for (int a = 0; a < grid.n; ++a)
      if (2 * std::abs(mode.k[a]) >= grid.points_per_axis)
        throw InputError("sample_potential: mode at or above the grid Nyquist limit");

  const int n = spec.n;
  const int np = SymmetricMatrix::packed_size(n);
  SampledPotential out;
  out.n = n;
  out.size = grid.size();
  out.value.resize(out.size);
  out.grad.resize(out.size * n);
  out.hess_packed.resize(out.size * np);

  int ix[3];
  double x[3];
  for (long s = 0; s < out.size; ++s) {
    grid.unpack(s, ix);
    for (int a = 0; a < n; ++a) x[a] = grid.coord(ix[a]);
    out.value[s] = spec.value(x);
    spec.gradient(x, out.grad.data() + s * n);
    const SymmetricMatrix h = spec.hessian(x);
    auto packed = h.packed();
    for (int e = 0; e < np; ++e) out.hess_packed[s * np + e] = packed[e];
  }
  return out;
}

double periodic_hessian_mean_deviation(const SampledPotential& sampled,
                                       const SymmetricMatrix& quadratic) {
  const int np = SymmetricMatrix::packed_size(sampled.n);
  auto qp = quadratic.packed();
  double worst = 0.0;
  for (int e = 0; e < np; ++e) {
    double sum = 0.0;
    for (long s = 0; s < sampled.size; ++s) sum += sampled.hess_packed[s * np + e];
    worst = std::max(worst, std::abs(sum / sampled.size - qp[e]));
  }
  return worst;
}

SymmetricMatrix ChiField::at(int it, long s) const {
  if (synthetic) return constant_chi;
  const int n = m - 1;
  const double t = grid.time_of(it);
  SymmetricMatrix chi(m);
  for (int a = 0; a < n; ++a) chi.at(0, a + 1) = grad_diff[s * n + a] * inv_sqrt_tau;
  const int np = SymmetricMatrix::packed_size(n);
  const double* h0 = hess0.data() + s * np;
  const double* h1 = hess1.data() + s * np;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const int e = SymmetricMatrix::index(i, j);
      chi.at(i + 1, j + 1) = (1.0 - t) * h0[e] + t * h1[e];
    }
  return chi;
}

std::span<const double> ChiField::gradient_difference(long s) const {
  const int n = m - 1;
  return {grad_diff.data() + s * n, static_cast<size_t>(n)};
}

SymmetricMatrix ChiField::interpolated_hessian(int it, long s) const {
  const int n = m - 1;
  const double t = grid.time_of(it);
  const int np = SymmetricMatrix::packed_size(n);
  SymmetricMatrix h(n);
  auto packed = h.packed();
  for (int e = 0; e < np; ++e)
    packed[e] = (1.0 - t) * hess0[s * np + e] + t * hess1[s * np + e];
  return h;
}

SymmetricMatrix ChiField::endpoint_hessian(int endpoint, long s) const {
  const int n = m - 1;
  const int np = SymmetricMatrix::packed_size(n);
  const std::vector<double>& src = endpoint == 0 ? hess0 : hess1;
  SymmetricMatrix h(n);
  auto packed = h.packed();
  for (int e = 0; e < np; ++e) packed[e] = src[s * np + e];
  return h;
}

ChiField assemble_chi(const BoundaryPair& pair, const CylinderGrid& grid) {
  pair.validate();
  grid.validate();
  if (pair.u0.n != grid.space.n) throw InputError("assemble_chi: dimension mismatch");

  const int n = grid.space.n;
  const long S = grid.space.size();

  const SampledPotential s0 = sample_potential(pair.u0, grid.space);
  const SampledPotential s1 = sample_potential(pair.u1, grid.space);

  ChiField chi;
  chi.grid = grid;
  chi.m = n + 1;
  chi.inv_sqrt_tau = 1.0 / std::sqrt(grid.tau);
  chi.grad_diff.resize(S * n);
  for (long k = 0; k < S * n; ++k) chi.grad_diff[k] = s1.grad[k] - s0.grad[k];
  chi.hess0 = s0.hess_packed;
  chi.hess1 = s1.hess_packed;
  return chi;
}

ChiField synthetic_chi(const SymmetricMatrix& chi_matrix, const CylinderGrid& grid) {
  grid.validate();
  if (chi_matrix.dim() != grid.space.n + 1)
    throw InputError("synthetic_chi: matrix dimension must be n + 1");
  if (!chi_matrix.finite()) throw InputError("synthetic_chi: non-finite entries");
  ChiField chi;
  chi.grid = grid;
  chi.m = grid.space.n + 1;
  chi.synthetic = true;
  chi.constant_chi = chi_matrix;
  chi.inv_sqrt_tau = 1.0 / std::sqrt(grid.tau);
  return chi;
}

double chi_trace_sup(const ChiField& chi) {
  if (chi.synthetic) return chi.constant_chi.trace();
  const int n = chi.m - 1;
  const int np = SymmetricMatrix::packed_size(n);
  const long S = static_cast<long>(chi.hess0.size()) / np;
  double sup = -1e308;
  for (long s = 0; s < S; ++s) {
    double tr0 = 0.0;
    double tr1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const int e = SymmetricMatrix::index(i, i);
      tr0 += chi.hess0[s * np + e];
      tr1 += chi.hess1[s * np + e];
    }
    sup = std::max(sup, std::max(tr0, tr1));
  }
  return sup;
}

SymmetricMatrix scaled_hessian_at(const CylinderField& v, const ChiField& chi, int it, long s) {
  const CylinderGrid& g = v.grid;
  if (it < 1 || it > g.time_points - 2)
    throw InputError("scaled_hessian_at: node is not interior");

  const int n = g.space.n;
  const double h = g.space.spacing();
  const double dt = g.dt();
  const double inv_tau_dt2 = 1.0 / (g.tau * dt * dt);
  const double inv_h2 = 1.0 / (h * h);
  const double inv_4h2 = 0.25 * inv_h2;
  const double mixed_scale = chi.inv_sqrt_tau / (4.0 * dt * h);

  SymmetricMatrix m = chi.at(it, s);

  int ix[3];
  g.space.unpack(s, ix);
  const double center = v.at(it, s);
  m.at(0, 0) += (v.at(it + 1, s) - 2.0 * center + v.at(it - 1, s)) * inv_tau_dt2;

  long sp[3], sm[3];
  for (int a = 0; a < n; ++a) {
    sp[a] = g.space.shifted(s, ix, a, +1);
    sm[a] = g.space.shifted(s, ix, a, -1);
    m.at(a + 1, a + 1) += (v.at(it, sp[a]) - 2.0 * center + v.at(it, sm[a])) * inv_h2;
    m.at(0, a + 1) += (v.at(it + 1, sp[a]) - v.at(it + 1, sm[a]) - v.at(it - 1, sp[a]) +
                       v.at(it - 1, sm[a])) *
                      mixed_scale;
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const long spp = g.space.shifted(sp[a], ix, b, +1);
      const long spm = g.space.shifted(sp[a], ix, b, -1);
      const long smp = g.space.shifted(sm[a], ix, b, +1);
      const long smm = g.space.shifted(sm[a], ix, b, -1);
      m.at(a + 1, b + 1) +=
          (v.at(it, spp) - v.at(it, spm) - v.at(it, smp) + v.at(it, smm)) * inv_4h2;
    }
  }
  return m;
}

void assemble_scaled_hessian_block(const CylinderField& v, const ChiField& chi, int it,
                                   long s_base, int count, double* a_soa) {
  const int m = chi.m;
  const int np = SymmetricMatrix::packed_size(m);
  constexpr int W = 4;
  for (int l = 0; l < W; ++l) {
    if (l < count) {
      const SymmetricMatrix mat = scaled_hessian_at(v, chi, it, s_base + l);
      auto packed = mat.packed();
      for (int e = 0; e < np; ++e) a_soa[e * W + l] = packed[e];
    } else {
      const SymmetricMatrix mat = SymmetricMatrix::identity(m);
      auto packed = mat.packed();
      for (int e = 0; e < np; ++e) a_soa[e * W + l] = packed[e];
    }
  }
}

MatrixField scaled_hessian_operator(const CylinderField& v, const ChiField& chi) {
  const CylinderGrid& g = v.grid;
  MatrixField field;
  field.grid = g;
  field.m = chi.m;
  const int np = SymmetricMatrix::packed_size(chi.m);
  field.packed.assign(g.node_count() * np, 0.0);
  const long S = g.space.size();
  for (int it = 1; it <= g.time_points - 2; ++it) {
    for (long s = 0; s < S; ++s) {
      const SymmetricMatrix m = scaled_hessian_at(v, chi, it, s);
      auto packed = m.packed();
      double* dst = field.packed.data() + g.node_index(it, s) * np;
      for (int e = 0; e < np; ++e) dst[e] = packed[e];
    }
  }
  return field;
}

SymmetricMatrix MatrixField::at(int it, long s) const {
  const int np = SymmetricMatrix::packed_size(m);
  SymmetricMatrix out(m);
  auto packed = out.packed();
  const double* src = this->packed.data() + grid.node_index(it, s) * np;
  for (int e = 0; e < np; ++e) packed[e] = src[e];
  return out;
}

PhaseFieldResult phase_field(const CylinderField& v, const ChiField& chi, double corner_bump) {
  const CylinderGrid& g = v.grid;
  const int m = chi.m;
  constexpr int W = 4;

  PhaseFieldResult out;
  out.phase.resize(g.interior_count());
  out.min_eigenvalue = 1e308;
  out.max_abs_eigenvalue = 0.0;

  const long S = g.space.size();
  const kernels::Ops& ops = kernels::active();
  double a_soa[SymmetricMatrix::packed_size(SymmetricMatrix::kMaxDim) * W];
  double evals[SymmetricMatrix::kMaxDim * W];

  for (int it = 1; it <= g.time_points - 2; ++it) {
    for (long s = 0; s < S; s += W) {
      const int count = static_cast<int>(std::min<long>(W, S - s));
      assemble_scaled_hessian_block(v, chi, it, s, count, a_soa);
      if (corner_bump != 0.0) {
        for (int l = 0; l < count; ++l) a_soa[l] += corner_bump;
      }
      ops.eig_batch(m, a_soa, evals);
      for (int l = 0; l < count; ++l) {
        double f = 0.0;
        for (int i = 0; i < m; ++i) f += std::atan(evals[i * W + l]);
        out.phase[(it - 1) * S + s + l] = f;
        out.min_eigenvalue = std::min(out.min_eigenvalue, evals[l]);
        out.max_abs_eigenvalue =
            std::max(out.max_abs_eigenvalue,
                     std::max(std::abs(evals[l]), std::abs(evals[(m - 1) * W + l])));
      }
    }
  }
  return out;
}

}  // namespace slg
