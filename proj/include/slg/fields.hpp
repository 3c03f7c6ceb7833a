#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "slg/symmetric_matrix.hpp"

// Grids and fields on the cylinder [0,1] x T^n (time rescaled by sqrt(tau)).
//
// Spatial layout is row-major with the last axis fastest; node index on the
// cylinder is it * space_size + spatial_index. All stencils are second-order
// central differences; spatial neighbors wrap around the torus, time faces
// carry Dirichlet data and no equation.

namespace slg {

struct TorusGrid {
  int n = 1;              // spatial dimension, 1..3
  int points_per_axis = 32;

  void validate() const;
  double spacing() const { return 1.0 / points_per_axis; }
  long size() const {
    long s = 1;
    for (int a = 0; a < n; ++a) s *= points_per_axis;
    return s;
  }
  long stride(int axis) const {
    long s = 1;
    for (int a = axis + 1; a < n; ++a) s *= points_per_axis;
    return s;
  }
  void unpack(long s, int* ix) const {
    for (int a = n - 1; a >= 0; --a) {
      ix[a] = static_cast<int>(s % points_per_axis);
      s /= points_per_axis;
    }
  }
  long pack(const int* ix) const {
    long s = 0;
    for (int a = 0; a < n; ++a) s = s * points_per_axis + ix[a];
    return s;
  }
  // Neighbor of spatial index s along axis, offset +1 or -1, with wrap.
  long shifted(long s, const int* ix, int axis, int offset) const {
    const long str = stride(axis);
    int i = ix[axis] + offset;
    if (i < 0) i += points_per_axis;
    if (i >= points_per_axis) i -= points_per_axis;
    return s + (static_cast<long>(i) - ix[axis]) * str;
  }
  double coord(int i) const { return static_cast<double>(i) / points_per_axis; }
};

struct CylinderGrid {
  TorusGrid space;
  int time_points = 33;  // includes both faces
  double tau = 1.0;

  void validate() const;
  double dt() const { return 1.0 / (time_points - 1); }
  double time_of(int it) const {
    return static_cast<double>(it) / static_cast<double>(time_points - 1);
  }
  long node_count() const { return static_cast<long>(time_points) * space.size(); }
  long interior_count() const { return static_cast<long>(time_points - 2) * space.size(); }
  long node_index(int it, long s) const { return static_cast<long>(it) * space.size() + s; }
};

// Scalar field over all cylinder nodes. Faces hold Dirichlet values exactly;
// for the solver unknown they stay identically zero.
struct CylinderField {
  CylinderGrid grid;
  std::vector<double> values;

  static CylinderField zeros(const CylinderGrid& g) {
    CylinderField f;
    f.grid = g;
    f.values.assign(g.node_count(), 0.0);
    return f;
  }
  double& at(int it, long s) { return values[grid.node_index(it, s)]; }
  double at(int it, long s) const { return values[grid.node_index(it, s)]; }
  double max_abs() const;
  // max |values| and max |first difference quotient| (time and space),
  // the discrete C^1 seminorm used for trend reporting.
  double max_abs_gradient() const;
};

struct TrigMode {
  std::array<int, 3> k{0, 0, 0};
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

// u(x) = x'Qx/2 + constant + sum_m [cos_amp cos(2 pi k.x) + sin_amp sin(2 pi k.x)].
// The quadratic part is the non-periodic piece; only its Hessian Q and the
// periodic derivatives ever enter the solver.
struct PotentialSpec {
  int n = 1;
  SymmetricMatrix quadratic;  // n x n
  double constant = 0.0;
  std::vector<TrigMode> modes;

  void validate() const;
  double value(const double* x) const;
  void gradient(const double* x, double* g) const;
  SymmetricMatrix hessian(const double* x) const;
};

struct BoundaryPair {
  PotentialSpec u0;
  PotentialSpec u1;
  void validate() const;  // equal dimensions and identical quadratic parts
};

// Pointwise samples of one potential over the torus grid.
struct SampledPotential {
  int n = 0;
  long size = 0;
  std::vector<double> value;        // size
  std::vector<double> grad;         // size * n
  std::vector<double> hess_packed;  // size * n(n+1)/2

  SymmetricMatrix hessian_at(long s) const;
};

// Samples and checks the mean-zero property of the periodic Hessian part.
// Modes at or above the grid Nyquist limit are rejected.
SampledPotential sample_potential(const PotentialSpec& spec, const TorusGrid& grid);

// Largest deviation of the grid mean of (hessian - quadratic) from zero,
// entrywise. Diagnostic for the sampling invariant.
double periodic_hessian_mean_deviation(const SampledPotential& sampled,
                                       const SymmetricMatrix& quadratic);

// chi = scaled Hessian of the interpolation path:
//   corner 0, first row grad(u1-u0)/sqrt(tau), lower block (1-t) H0 + t H1.
// Synthetic chi fields hold one constant matrix used verbatim at every node
// (no tau rescaling); they exist for operator-level studies.
struct ChiField {
  CylinderGrid grid;
  int m = 0;  // n + 1

  std::vector<double> grad_diff;  // S * n, unscaled grad(u1 - u0)
  std::vector<double> hess0;      // S * n(n+1)/2
  std::vector<double> hess1;

  bool synthetic = false;
  SymmetricMatrix constant_chi;

  double inv_sqrt_tau = 1.0;

  SymmetricMatrix at(int it, long s) const;
  std::span<const double> gradient_difference(long s) const;
  SymmetricMatrix interpolated_hessian(int it, long s) const;  // n x n block
  SymmetricMatrix endpoint_hessian(int endpoint, long s) const;
};

ChiField assemble_chi(const BoundaryPair& pair, const CylinderGrid& grid);
ChiField synthetic_chi(const SymmetricMatrix& chi, const CylinderGrid& grid);

// sup over nodes of tr(chi), faces included. Linear t-interpolation makes the
// endpoint slices the extremizers for potential pairs.
double chi_trace_sup(const ChiField& chi);

// M = chi + D^2 v at one interior node, with the time scalings
// (1/tau on v_tt, 1/sqrt(tau) on the mixed row) applied.
SymmetricMatrix scaled_hessian_at(const CylinderField& v, const ChiField& chi, int it, long s);

// Same, for `count` consecutive spatial nodes at fixed it, written as packed
// SoA lanes for the batched kernels. Lanes past `count` are padded with the
// identity so downstream eigensolves stay well defined.
void assemble_scaled_hessian_block(const CylinderField& v, const ChiField& chi, int it,
                                   long s_base, int count, double* a_soa);

// Dense per-node operator field; interior nodes filled, face slots zero.
struct MatrixField {
  CylinderGrid grid;
  int m = 0;
  std::vector<double> packed;  // node * m(m+1)/2
  SymmetricMatrix at(int it, long s) const;
};

MatrixField scaled_hessian_operator(const CylinderField& v, const ChiField& chi);

// arctan_sum(chi + D^2 v + corner_bump * e00) over interior nodes, evaluated
// through the batched kernels. phase is interior-node-major: (it-1)*S + s.
// The eigenvalue extremes feed the ellipticity and convexity monitors.
struct PhaseFieldResult {
  std::vector<double> phase;
  double min_eigenvalue = 0.0;
  double max_abs_eigenvalue = 0.0;
};

PhaseFieldResult phase_field(const CylinderField& v, const ChiField& chi,
                             double corner_bump = 0.0);

}  // namespace slg
