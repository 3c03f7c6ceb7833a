#include "slg/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "slg/errors.hpp"

namespace slg {

namespace {

constexpr int kMaxDim = SymmetricMatrix::kMaxDim;
constexpr double kPi = std::numbers::pi;

// Cyclic Jacobi on a dense local copy. Deterministic: fixed sweep order
// (row-major upper triangle), convergence measured against the initial
// Frobenius norm, hard sweep cap. Quadratic convergence makes ~10 sweeps
// ample for dim <= 8.
int jacobi_eigenvalues(const SymmetricMatrix& in, double* values_out) {
  const int m = in.dim();
  if (m < 1) throw InputError("eigenvalues: matrix has no dimension");
  if (!in.finite()) throw InputError("eigenvalues: non-finite entries");

  double a[kMaxDim][kMaxDim];
  double fro2 = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = in(i, j);
      a[i][j] = a[j][i] = v;
      fro2 += (i == j) ? v * v : 2.0 * v * v;
    }
  }
  const double stop = fro2 * 1e-30 + 1e-280;

  for (int sweep = 0; sweep < 40; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < m - 1; ++p)
      for (int q = p + 1; q < m; ++q) off += a[p][q] * a[p][q];
    if (off <= stop) break;

    for (int p = 0; p < m - 1; ++p) {
      for (int q = p + 1; q < m; ++q) {
        const double apq = a[p][q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        const double t =
            std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        a[p][p] -= t * apq;
        a[q][q] += t * apq;
        a[p][q] = a[q][p] = 0.0;
        for (int r = 0; r < m; ++r) {
          if (r == p || r == q) continue;
          const double arp = a[r][p];
          const double arq = a[r][q];
          a[r][p] = a[p][r] = c * arp - s * arq;
          a[r][q] = a[q][r] = s * arp + c * arq;
        }
      }
    }
  }

  for (int i = 0; i < m; ++i) values_out[i] = a[i][i];
  std::sort(values_out, values_out + m);
  return m;
}

// P + iQ with P = sigma_0 - sigma_2 + sigma_4 - ... and
// Q = sigma_1 - sigma_3 + ... so that prod(1 + i*lambda) = P + iQ.
void alternating_sigma_sums(std::span<const double> lambda, double* p_out, double* q_out) {
  const int m = static_cast<int>(lambda.size());
  std::array<double, kMaxDim + 2> coeff{};
  coeff[0] = 1.0;
  int degree = 0;
  for (int i = 0; i < m; ++i) {
    ++degree;
    for (int j = degree; j >= 1; --j) coeff[j] = coeff[j - 1] + lambda[i] * coeff[j];
    coeff[0] *= lambda[i];
  }
  // Here coeff[j] is the coefficient of x^j in prod(x + lambda_i), so
  // sigma_k = coeff[m - k].
  double p = 0.0;
  double q = 0.0;
  double sign = 1.0;
  for (int k = 0; k <= m; k += 2) {
    p += sign * coeff[m - k];
    if (k + 1 <= m) q += sign * coeff[m - k - 1];
    sign = -sign;
  }
  *p_out = p;
  *q_out = q;
}

void validate_operator_inputs(double u_tt, std::span<const double> grad_u_t,
                              const SymmetricMatrix& hess_x, double tau) {
  const int n = hess_x.dim();
  if (n < 1) throw InputError("geodesic operator: spatial Hessian has no dimension");
  if (static_cast<int>(grad_u_t.size()) != n)
    throw InputError("geodesic operator: gradient length does not match Hessian dimension");
  if (!std::isfinite(u_tt) || !hess_x.finite())
    throw InputError("geodesic operator: non-finite second derivatives");
  for (double g : grad_u_t)
    if (!std::isfinite(g)) throw InputError("geodesic operator: non-finite gradient entry");
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw InputError("geodesic operator: tau must be finite and >= 0");
}

}  // namespace

PhaseBranch select_branch(int n) {
  if (n < 1 || n > 7) throw InputError("select_branch: dimension out of range");
  static constexpr double kThetaTable[4] = {0.0, kPi / 2.0, kPi, -kPi / 2.0};
  PhaseBranch b;
  b.n = n;
  b.theta = kThetaTable[n % 4];
  b.big_theta = n * (kPi / 2.0);
  return b;
}

PhaseBranch make_branch(int n, double theta, double big_theta) {
  if (n < 1 || n > 7) throw InputError("make_branch: dimension out of range");
  if (!std::isfinite(theta) || !std::isfinite(big_theta))
    throw InputError("make_branch: non-finite angle");
  const double k = std::round((big_theta - theta) / kPi);
  if (std::abs(big_theta - (k * kPi + theta)) > 1e-9 * (1.0 + std::abs(big_theta)))
    throw InputError("make_branch: big_theta is not theta plus an integer multiple of pi");
  const double lo = n * (kPi / 2.0);
  const double hi = (n + 2) * (kPi / 2.0);
  if (!(big_theta >= lo - 1e-12 && big_theta < hi))
    throw InputError("make_branch: big_theta outside the admissible branch window");
  return PhaseBranch{n, theta, big_theta};
}

std::vector<double> eigenvalues(const SymmetricMatrix& a) {
  std::vector<double> out(a.dim());
  jacobi_eigenvalues(a, out.data());
  return out;
}

int eigenvalues(const SymmetricMatrix& a, std::span<double> out) {
  if (static_cast<int>(out.size()) < a.dim())
    throw InputError("eigenvalues: output span too small");
  return jacobi_eigenvalues(a, out.data());
}

double arctan_sum(const SymmetricMatrix& a) {
  double lambda[kMaxDim];
  const int m = jacobi_eigenvalues(a, lambda);
  double f = 0.0;
  for (int i = 0; i < m; ++i) f += std::atan(lambda[i]);
  return f;
}

SymmetricMatrix arctan_sum_gradient(const SymmetricMatrix& a) {
  const int m = a.dim();
  if (!a.finite()) throw InputError("arctan_sum_gradient: non-finite entries");

  // b = I + a^2 is symmetric positive definite (>= I), so the Cholesky
  // pivots never need guarding.
  double b[kMaxDim][kMaxDim];
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = (i == j) ? 1.0 : 0.0;
      for (int k = 0; k < m; ++k) s += a(i, k) * a(k, j);
      b[i][j] = b[j][i] = s;
    }
  }

  double l[kMaxDim][kMaxDim] = {};
  for (int j = 0; j < m; ++j) {
    double d = b[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < m; ++i) {
      double s = b[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }

  // linv = L^{-1} (lower triangular), then b^{-1} = linv^T * linv.
  double linv[kMaxDim][kMaxDim] = {};
  for (int j = 0; j < m; ++j) {
    linv[j][j] = 1.0 / l[j][j];
    for (int i = j + 1; i < m; ++i) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s += l[i][k] * linv[k][j];
      linv[i][j] = -s / l[i][i];
    }
  }

  SymmetricMatrix out(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = i; k < m; ++k) s += linv[k][i] * linv[k][j];
      out.at(i, j) = s;
    }
  }
  return out;
}

double elementary_symmetric(std::span<const double> values, int k) {
  const int m = static_cast<int>(values.size());
  if (k < 0 || k > m) throw InputError("elementary_symmetric: order out of range");
  for (double v : values)
    if (!std::isfinite(v)) throw InputError("elementary_symmetric: non-finite value");
  if (k == 0) return 1.0;

  // Coefficients of prod(x + lambda_i); sigma_k is the coefficient of x^{m-k}.
  std::array<double, kMaxDim + 2> coeff{};
  std::vector<double> big;
  double* c = coeff.data();
  if (m + 1 > static_cast<int>(coeff.size())) {
    big.assign(m + 1, 0.0);
    c = big.data();
  }
  c[0] = 1.0;
  int degree = 0;
  for (int i = 0; i < m; ++i) {
    ++degree;
    for (int j = degree; j >= 1; --j) c[j] = c[j - 1] + values[i] * c[j];
    c[0] *= values[i];
  }
  return c[m - k];
}

std::complex<double> complex_determinant(std::span<std::complex<double>> a, int dim) {
  if (static_cast<int>(a.size()) != dim * dim || dim < 1)
    throw InputError("complex_determinant: bad buffer size");
  double scale = 0.0;
  for (const auto& z : a) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InputError("complex_determinant: non-finite entry");
    scale = std::max(scale, std::abs(z));
  }
  if (scale == 0.0) return 0.0;
  const double pivot_floor = 1e-14 * scale;

  std::complex<double> det = 1.0;
  for (int col = 0; col < dim; ++col) {
    int pivot_row = col;
    double pivot_mag = std::abs(a[col * dim + col]);
    for (int r = col + 1; r < dim; ++r) {
      const double mag = std::abs(a[r * dim + col]);
      if (mag > pivot_mag) {
        pivot_mag = mag;
        pivot_row = r;
      }
    }
    if (pivot_mag < pivot_floor) return 0.0;
    if (pivot_row != col) {
      for (int c = col; c < dim; ++c) std::swap(a[pivot_row * dim + c], a[col * dim + c]);
      det = -det;
    }
    const std::complex<double> pivot = a[col * dim + col];
    det *= pivot;
    for (int r = col + 1; r < dim; ++r) {
      const std::complex<double> factor = a[r * dim + col] / pivot;
      for (int c = col + 1; c < dim; ++c) a[r * dim + c] -= factor * a[col * dim + c];
    }
  }
  return det;
}

double geodesic_operator_det(double u_tt, std::span<const double> grad_u_t,
                             const SymmetricMatrix& hess_x, double tau,
                             const PhaseBranch& branch) {
  validate_operator_inputs(u_tt, grad_u_t, hess_x, tau);
  const int n = hess_x.dim();
  const int m = n + 1;

  std::array<std::complex<double>, (kMaxDim + 1) * (kMaxDim + 1)> buf{};
  auto at = [&](int i, int j) -> std::complex<double>& { return buf[i * m + j]; };
  at(0, 0) = {tau, u_tt};
  for (int j = 0; j < n; ++j) {
    at(0, j + 1) = {0.0, grad_u_t[j]};
    at(j + 1, 0) = {0.0, grad_u_t[j]};
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at(i + 1, j + 1) = {i == j ? 1.0 : 0.0, hess_x(i, j)};

  const std::complex<double> det = complex_determinant({buf.data(), size_t(m) * size_t(m)}, m);
  const std::complex<double> rot{std::cos(branch.theta), -std::sin(branch.theta)};
  return (rot * det).imag();
}

double geodesic_operator_sigma(double u_tt, std::span<const double> grad_u_t,
                               const SymmetricMatrix& hess_x, double tau,
                               const PhaseBranch& branch) {
  validate_operator_inputs(u_tt, grad_u_t, hess_x, tau);
  const int n = hess_x.dim();

  SymmetricMatrix full(n + 1);
  full.at(0, 0) = u_tt;
  for (int j = 0; j < n; ++j) full.at(0, j + 1) = grad_u_t[j];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) full.at(i + 1, j + 1) = hess_x(i, j);

  double lambda_full[kMaxDim];
  const int mf = jacobi_eigenvalues(full, lambda_full);
  double p_full, q_full;
  alternating_sigma_sums({lambda_full, static_cast<size_t>(mf)}, &p_full, &q_full);

  double lambda_x[kMaxDim];
  const int mx = jacobi_eigenvalues(hess_x, lambda_x);
  double p_x, q_x;
  alternating_sigma_sums({lambda_x, static_cast<size_t>(mx)}, &p_x, &q_x);

  const double ct = std::cos(branch.theta);
  const double st = std::sin(branch.theta);
  return (ct * q_full - st * p_full) - (1.0 - tau) * (ct * q_x - st * p_x);
}

double lagrangian_phase_raw(const SymmetricMatrix& hess_x) { return arctan_sum(hess_x); }

double lagrangian_phase(const SymmetricMatrix& hess_x, double theta) {
  return wrap_to_pi(arctan_sum(hess_x) - theta);
}

double wrap_to_pi(double angle) {
  if (!std::isfinite(angle)) throw InputError("wrap_to_pi: non-finite angle");
  const double k = std::ceil((angle - kPi) / (2.0 * kPi));
  return angle - 2.0 * kPi * k;
}

}  // namespace slg
