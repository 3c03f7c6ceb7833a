#pragma once

#include <string_view>

namespace slg::kernels {

// Batched spectral primitives over groups of kWidth matrices.
//
// Layout: structure-of-arrays over the packed lower triangle. For a batch of
// kWidth symmetric m x m matrices, packed entry e (0 <= e < m(m+1)/2) of lane
// l sits at a[e * kWidth + l]. Eigenvalue i of lane l sits at
// evals[i * kWidth + l], ascending in i per lane.
//
// Two interchangeable implementations ship: a scalar reference (a thin loop
// over the single-matrix routines in slg/spectral.hpp) and an AVX2 variant
// compiled only on x86-64. The active implementation is chosen at runtime;
// both produce results equal to within a few ulp, which the test suite pins.
// The SIMD path covers m <= 4 (all cylinder operators for n <= 3); larger m
// falls through to the scalar reference inside either implementation.

inline constexpr int kWidth = 4;

struct Ops {
  const char* name;
  // Eigenvalues of each lane, ascending.
  void (*eig_batch)(int m, const double* a, double* evals);
  // (I + A^2)^{-1} per lane, packed SoA, same layout as the input.
  void (*inv_iaa_batch)(int m, const double* a, double* out);
};

// Scalar reference implementation. Always available.
const Ops& scalar_ops();

// True when the binary carries AVX2 code and the CPU reports support.
bool avx2_available();

// Currently selected implementation. Defaults to the best available.
const Ops& active();

// Select "scalar", "avx2", or "auto". Returns false (and leaves the selection
// unchanged) when the request cannot be honored. Not thread-safe; call before
// starting solver work.
bool select(std::string_view mode);

std::string_view active_name();

}  // namespace slg::kernels
