#include "slg/kernels.hpp"
#include "slg/spectral.hpp"
#include "slg/symmetric_matrix.hpp"

// Scalar reference kernels: the batched entry points are literal loops over
// the public single-matrix routines, so "reference" means reference.

namespace slg::kernels {

namespace {

void eig_batch_scalar(int m, const double* a, double* evals) {
  const int np = SymmetricMatrix::packed_size(m);
  double lane_values[SymmetricMatrix::kMaxDim];
  for (int l = 0; l < kWidth; ++l) {
    SymmetricMatrix mat(m);
    auto packed = mat.packed();
    for (int e = 0; e < np; ++e) packed[e] = a[e * kWidth + l];
    eigenvalues(mat, {lane_values, static_cast<size_t>(m)});
    for (int i = 0; i < m; ++i) evals[i * kWidth + l] = lane_values[i];
  }
}

void inv_iaa_batch_scalar(int m, const double* a, double* out) {
  const int np = SymmetricMatrix::packed_size(m);
  for (int l = 0; l < kWidth; ++l) {
    SymmetricMatrix mat(m);
    auto packed = mat.packed();
    for (int e = 0; e < np; ++e) packed[e] = a[e * kWidth + l];
    const SymmetricMatrix inv = arctan_sum_gradient(mat);
    auto inv_packed = inv.packed();
    for (int e = 0; e < np; ++e) out[e * kWidth + l] = inv_packed[e];
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", &eig_batch_scalar, &inv_iaa_batch_scalar};
  return ops;
}

}  // namespace slg::kernels
