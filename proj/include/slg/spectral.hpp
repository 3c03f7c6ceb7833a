#pragma once

#include <complex>
#include <span>
#include <vector>

#include "slg/symmetric_matrix.hpp"

// Spectral primitives for the rotated-phase operator.
//
// Everything here works on small symmetric matrices (dim <= 8). The solver
// evaluates these per grid node, so the routines avoid allocation; the
// std::vector returns exist only on the convenience API used by tests and
// reporting. Batched SIMD variants of the hot entry points live in
// slg/kernels.hpp and are equivalence-tested against these references.

namespace slg {

// Phase branch data for dimension n: the rotation angle theta of the
// calibration form and the total phase target. The admissible elliptic branch
// requires big_theta in [(n)*pi/2, (n+2)*pi/2) for the (n+1)-dimensional
// operator; the solver targets the critical value big_theta = n*pi/2.
struct PhaseBranch {
  int n = 0;
  double theta = 0.0;
  double big_theta = 0.0;
};

// Default branch for dimension n: theta follows the period-4 table
// {0, pi/2, pi, -pi/2} for n = 0,1,2,3 (mod 4) and big_theta = n*pi/2.
PhaseBranch select_branch(int n);

// Branch with explicit angles. Validates big_theta = k*pi + theta for an
// integer k and big_theta in [n*pi/2, (n+2)*pi/2); throws InputError.
PhaseBranch make_branch(int n, double theta, double big_theta);

// Eigenvalues of a, ascending. Cyclic Jacobi; deterministic sweep order.
std::vector<double> eigenvalues(const SymmetricMatrix& a);

// No-allocation form. out must hold a.dim() entries; returns the count.
int eigenvalues(const SymmetricMatrix& a, std::span<double> out);

// f(a) = sum_i arctan(lambda_i(a)). Strictly increasing in the matrix order
// and concave where a > 0.
double arctan_sum(const SymmetricMatrix& a);

// Derivative of arctan_sum in the symmetric-matrix sense:
// d/ds f(a + s*e) = <gradient, e>_F for symmetric directions e.
// Equals (I + a^2)^{-1}, computed from the Cholesky factor of I + a^2.
SymmetricMatrix arctan_sum_gradient(const SymmetricMatrix& a);

// Elementary symmetric polynomial sigma_k of the given values.
// k = 0 returns 1; k outside [0, size] is an input error.
double elementary_symmetric(std::span<const double> values, int k);

// Degenerate-operator value via the complex determinant:
//   Im( exp(-i*theta) * det M ),  M = [[tau + i*u_tt, i*grad_u_t^T],
//                                      [i*grad_u_t,   I_n + i*hess_x]].
// tau = 0 gives the unregularized operator. Entries are the unscaled
// second derivatives; any grid scaling happens before this call.
double geodesic_operator_det(double u_tt, std::span<const double> grad_u_t,
                             const SymmetricMatrix& hess_x, double tau,
                             const PhaseBranch& branch);

// Same value through the sigma_k expansion:
//   Im(e^{-i t} det(I + iA)) = cos(t)*sum_odd(A) - sin(t)*sum_even(A)
// applied to det M = det(I_{n+1} + i D2u) - (1 - tau) * det(I_n + i hess_x),
// where D2u is the full (n+1)-dimensional Hessian assembled from the inputs.
// Agrees with geodesic_operator_det to roundoff; kept separate as a
// cross-check path (the two share no intermediate code).
double geodesic_operator_sigma(double u_tt, std::span<const double> grad_u_t,
                               const SymmetricMatrix& hess_x, double tau,
                               const PhaseBranch& branch);

// Raw Lagrangian phase sum_i arctan(lambda_i(hess_x)) of a spatial Hessian.
// Admissibility comparisons use this unreduced value.
double lagrangian_phase_raw(const SymmetricMatrix& hess_x);

// Phase relative to the branch rotation, reduced to (-pi, pi].
double lagrangian_phase(const SymmetricMatrix& hess_x, double theta);

// Reduce an angle to (-pi, pi].
double wrap_to_pi(double angle);

// Determinant of a dense complex matrix by partially pivoted LU. a is
// row-major dim*dim and is destroyed. Near-singular pivots (relative size
// below 1e-14) short-circuit to zero.
std::complex<double> complex_determinant(std::span<std::complex<double>> a, int dim);

}  // namespace slg
