#ifdef SLG_HAVE_AVX2

#include <immintrin.h>

#include "slg/kernels.hpp"
#include "slg/spectral.hpp"
#include "slg/symmetric_matrix.hpp"

// AVX2 kernels: four matrices per call, one lane per vector slot. The Jacobi
// sweep is branchless; lanes that would divide by a vanishing pivot are
// blended onto the identity rotation instead. All four lanes sweep together
// until every lane meets the stopping test, so converged lanes absorb a few
// extra no-op rotations; the equivalence tests bound the effect.
//
// No FMA contractions here: plain mul/add keeps the arithmetic identical to
// the scalar reference operation for operation.

namespace slg::kernels {

namespace {

const __m256d kSignMask = _mm256_set1_pd(-0.0);
const __m256d kOne = _mm256_set1_pd(1.0);
const __m256d kHalfScaleTiny = _mm256_set1_pd(1e-300);

inline __m256d vabs(__m256d x) { return _mm256_andnot_pd(kSignMask, x); }

inline __m256d vsign1(__m256d x) {
  // copysign(1, x)
  return _mm256_or_pd(_mm256_and_pd(kSignMask, x), kOne);
}

inline __m256d vblend(__m256d mask, __m256d when_set, __m256d when_clear) {
  return _mm256_blendv_pd(when_clear, when_set, mask);
}

template <int M>
struct JacobiBatch {
  static constexpr int kPacked = M * (M + 1) / 2;

  static void eig(const double* a_soa, double* evals_soa) {
    __m256d a[M][M];
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j <= i; ++j) {
        const int e = i * (i + 1) / 2 + j;
        a[i][j] = _mm256_loadu_pd(a_soa + e * kWidth);
        a[j][i] = a[i][j];
      }
    }

    __m256d fro2 = _mm256_setzero_pd();
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j <= i; ++j) {
        const __m256d sq = _mm256_mul_pd(a[i][j], a[i][j]);
        fro2 = _mm256_add_pd(fro2, (i == j) ? sq : _mm256_add_pd(sq, sq));
      }
    }
    const __m256d stop = _mm256_add_pd(_mm256_mul_pd(fro2, _mm256_set1_pd(1e-30)),
                                       _mm256_set1_pd(1e-280));

    for (int sweep = 0; sweep < 40; ++sweep) {
      __m256d off = _mm256_setzero_pd();
      for (int p = 0; p < M - 1; ++p)
        for (int q = p + 1; q < M; ++q)
          off = _mm256_add_pd(off, _mm256_mul_pd(a[p][q], a[p][q]));
      if (_mm256_movemask_pd(_mm256_cmp_pd(off, stop, _CMP_GT_OQ)) == 0) break;

      for (int p = 0; p < M - 1; ++p) {
        for (int q = p + 1; q < M; ++q) {
          const __m256d apq = a[p][q];
          const __m256d tiny = _mm256_cmp_pd(vabs(apq), kHalfScaleTiny, _CMP_LT_OQ);

          const __m256d diff = _mm256_sub_pd(a[q][q], a[p][p]);
          const __m256d theta = _mm256_div_pd(diff, _mm256_add_pd(apq, apq));
          const __m256d t_raw = _mm256_div_pd(
              vsign1(theta),
              _mm256_add_pd(vabs(theta),
                            _mm256_sqrt_pd(_mm256_add_pd(kOne, _mm256_mul_pd(theta, theta)))));
          const __m256d t = vblend(tiny, _mm256_setzero_pd(), t_raw);
          const __m256d c =
              _mm256_div_pd(kOne, _mm256_sqrt_pd(_mm256_add_pd(kOne, _mm256_mul_pd(t, t))));
          const __m256d s = _mm256_mul_pd(t, c);

          a[p][p] = _mm256_sub_pd(a[p][p], _mm256_mul_pd(t, apq));
          a[q][q] = _mm256_add_pd(a[q][q], _mm256_mul_pd(t, apq));
          const __m256d zeroed = vblend(tiny, apq, _mm256_setzero_pd());
          a[p][q] = zeroed;
          a[q][p] = zeroed;
          for (int r = 0; r < M; ++r) {
            if (r == p || r == q) continue;
            const __m256d arp = a[r][p];
            const __m256d arq = a[r][q];
            const __m256d nrp = _mm256_sub_pd(_mm256_mul_pd(c, arp), _mm256_mul_pd(s, arq));
            const __m256d nrq = _mm256_add_pd(_mm256_mul_pd(s, arp), _mm256_mul_pd(c, arq));
            a[r][p] = nrp;
            a[p][r] = nrp;
            a[r][q] = nrq;
            a[q][r] = nrq;
          }
        }
      }
    }

    __m256d v[M];
    for (int i = 0; i < M; ++i) v[i] = a[i][i];
    sort_ascending(v);
    for (int i = 0; i < M; ++i) _mm256_storeu_pd(evals_soa + i * kWidth, v[i]);
  }

  static void sort_ascending(__m256d (&v)[M]) {
    auto comparator = [&](int i, int j) {
      const __m256d lo = _mm256_min_pd(v[i], v[j]);
      const __m256d hi = _mm256_max_pd(v[i], v[j]);
      v[i] = lo;
      v[j] = hi;
    };
    if constexpr (M == 2) {
      comparator(0, 1);
    } else if constexpr (M == 3) {
      comparator(0, 2);
      comparator(0, 1);
      comparator(1, 2);
    } else if constexpr (M == 4) {
      comparator(0, 2);
      comparator(1, 3);
      comparator(0, 1);
      comparator(2, 3);
      comparator(1, 2);
    }
  }

  // (I + A^2)^{-1} through the Cholesky factor, mirroring
  // slg::arctan_sum_gradient step for step so the two agree to the ulp.
  static void inv_iaa(const double* a_soa, double* out_soa) {
    __m256d a[M][M];
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j <= i; ++j) {
        const int e = i * (i + 1) / 2 + j;
        a[i][j] = _mm256_loadu_pd(a_soa + e * kWidth);
        a[j][i] = a[i][j];
      }
    }

    __m256d b[M][M];
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j <= i; ++j) {
        __m256d s = (i == j) ? kOne : _mm256_setzero_pd();
        for (int k = 0; k < M; ++k) s = _mm256_add_pd(s, _mm256_mul_pd(a[i][k], a[k][j]));
        b[i][j] = s;
        b[j][i] = s;
      }
    }

    __m256d l[M][M];
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) l[i][j] = _mm256_setzero_pd();
    for (int j = 0; j < M; ++j) {
      __m256d d = b[j][j];
      for (int k = 0; k < j; ++k) d = _mm256_sub_pd(d, _mm256_mul_pd(l[j][k], l[j][k]));
      l[j][j] = _mm256_sqrt_pd(d);
      for (int i = j + 1; i < M; ++i) {
        __m256d s = b[i][j];
        for (int k = 0; k < j; ++k) s = _mm256_sub_pd(s, _mm256_mul_pd(l[i][k], l[j][k]));
        l[i][j] = _mm256_div_pd(s, l[j][j]);
      }
    }

    __m256d linv[M][M];
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) linv[i][j] = _mm256_setzero_pd();
    for (int j = 0; j < M; ++j) {
      linv[j][j] = _mm256_div_pd(kOne, l[j][j]);
      for (int i = j + 1; i < M; ++i) {
        __m256d s = _mm256_setzero_pd();
        for (int k = j; k < i; ++k) s = _mm256_add_pd(s, _mm256_mul_pd(l[i][k], linv[k][j]));
        linv[i][j] = _mm256_div_pd(_mm256_sub_pd(_mm256_setzero_pd(), s), l[i][i]);
      }
    }

    for (int i = 0; i < M; ++i) {
      for (int j = 0; j <= i; ++j) {
        __m256d s = _mm256_setzero_pd();
        for (int k = i; k < M; ++k) s = _mm256_add_pd(s, _mm256_mul_pd(linv[k][i], linv[k][j]));
        const int e = i * (i + 1) / 2 + j;
        _mm256_storeu_pd(out_soa + e * kWidth, s);
      }
    }
  }
};

void eig_batch_avx2(int m, const double* a, double* evals) {
  switch (m) {
    case 1:
      for (int l = 0; l < kWidth; ++l) evals[l] = a[l];
      return;
    case 2:
      JacobiBatch<2>::eig(a, evals);
      return;
    case 3:
      JacobiBatch<3>::eig(a, evals);
      return;
    case 4:
      JacobiBatch<4>::eig(a, evals);
      return;
    default:
      scalar_ops().eig_batch(m, a, evals);
      return;
  }
}

void inv_iaa_batch_avx2(int m, const double* a, double* out) {
  switch (m) {
    case 1:
      for (int l = 0; l < kWidth; ++l) out[l] = 1.0 / (1.0 + a[l] * a[l]);
      return;
    case 2:
      JacobiBatch<2>::inv_iaa(a, out);
      return;
    case 3:
      JacobiBatch<3>::inv_iaa(a, out);
      return;
    case 4:
      JacobiBatch<4>::inv_iaa(a, out);
      return;
    default:
      scalar_ops().inv_iaa_batch(m, a, out);
      return;
  }
}

}  // namespace

const Ops& avx2_ops_impl() {
  static const Ops ops{"avx2", &eig_batch_avx2, &inv_iaa_batch_avx2};
  return ops;
}

}  // namespace slg::kernels

#endif  // SLG_HAVE_AVX2
