#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "slg/kernels.hpp"
#include "slg/spectral.hpp"
#include "slg/symmetric_matrix.hpp"

using namespace slg;

namespace {

// Packed SoA batch: entry e of lane l at a[e * kWidth + l].
std::vector<double> random_batch(std::mt19937& rng, int m, double scale = 3.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> a(static_cast<std::size_t>(m * (m + 1) / 2) * kernels::kWidth);
  for (double& x : a) x = dist(rng);
  return a;
}

SymmetricMatrix lane_matrix(const std::vector<double>& a, int m, int lane) {
  SymmetricMatrix s(m);
  const int plen = m * (m + 1) / 2;
  for (int e = 0; e < plen; ++e)
    s.packed()[static_cast<std::size_t>(e)] =
        a[static_cast<std::size_t>(e) * kernels::kWidth + lane];
  return s;
}

struct KernelGuard {
  std::string saved;
  KernelGuard() : saved(kernels::active_name()) {}
  ~KernelGuard() { kernels::select(saved); }
};

}  // namespace

TEST_CASE("scalar kernels match the single-matrix reference routines") {
  std::mt19937 rng(321);
  const kernels::Ops& ops = kernels::scalar_ops();
  for (int m = 1; m <= 6; ++m) {
    const int plen = m * (m + 1) / 2;
    for (int rep = 0; rep < 16; ++rep) {
      const std::vector<double> a = random_batch(rng, m);
      std::vector<double> evals(static_cast<std::size_t>(m) * kernels::kWidth);
      std::vector<double> inv(static_cast<std::size_t>(plen) * kernels::kWidth);
      ops.eig_batch(m, a.data(), evals.data());
      ops.inv_iaa_batch(m, a.data(), inv.data());
      for (int l = 0; l < kernels::kWidth; ++l) {
        const SymmetricMatrix s = lane_matrix(a, m, l);
        const std::vector<double> ref = eigenvalues(s);
        for (int i = 0; i < m; ++i)
          CHECK(evals[static_cast<std::size_t>(i) * kernels::kWidth + l] ==
                doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-13));
        const SymmetricMatrix g = arctan_sum_gradient(s);
        for (int e = 0; e < plen; ++e)
          CHECK(inv[static_cast<std::size_t>(e) * kernels::kWidth + l] ==
                doctest::Approx(g.packed()[static_cast<std::size_t>(e)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("active kernels agree with the scalar reference") {
  std::mt19937 rng(654);
  const kernels::Ops& ref = kernels::scalar_ops();
  const kernels::Ops& act = kernels::active();
  INFO("active kernel: ", kernels::active_name());
  double worst = 0.0;
  for (int m = 1; m <= 6; ++m) {
    const int plen = m * (m + 1) / 2;
    for (int rep = 0; rep < 32; ++rep) {
      const std::vector<double> a = random_batch(rng, m);
      std::vector<double> e1(static_cast<std::size_t>(m) * kernels::kWidth);
      std::vector<double> e2 = e1;
      std::vector<double> i1(static_cast<std::size_t>(plen) * kernels::kWidth);
      std::vector<double> i2 = i1;
      ref.eig_batch(m, a.data(), e1.data());
      act.eig_batch(m, a.data(), e2.data());
      ref.inv_iaa_batch(m, a.data(), i1.data());
      act.inv_iaa_batch(m, a.data(), i2.data());
      for (std::size_t k = 0; k < e1.size(); ++k)
        worst = std::max(worst, std::fabs(e1[k] - e2[k]));
      for (std::size_t k = 0; k < i1.size(); ++k)
        worst = std::max(worst, std::fabs(i1[k] - i2[k]));
    }
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("eigenvalues come out ascending per lane") {
  std::mt19937 rng(777);
  const kernels::Ops& act = kernels::active();
  for (int m = 2; m <= 4; ++m) {
    const std::vector<double> a = random_batch(rng, m);
    std::vector<double> evals(static_cast<std::size_t>(m) * kernels::kWidth);
    act.eig_batch(m, a.data(), evals.data());
    for (int l = 0; l < kernels::kWidth; ++l)
      for (int i = 0; i + 1 < m; ++i)
        CHECK(evals[static_cast<std::size_t>(i) * kernels::kWidth + l] <=
              evals[static_cast<std::size_t>(i + 1) * kernels::kWidth + l]);
  }
}

TEST_CASE("lane independence: diagonal batch with per-lane values") {
  // Lane l holds diag(l+1, l+2): eigenvalues are exactly those values, and
  // (I + A^2)^{-1} is diagonal with entries 1/(1+d^2). Cross-lane mixing
  // would corrupt at least one lane.
  const int m = 2;
  const int plen = 3;
  std::vector<double> a(static_cast<std::size_t>(plen) * kernels::kWidth, 0.0);
  for (int l = 0; l < kernels::kWidth; ++l) {
    a[static_cast<std::size_t>(SymmetricMatrix::index(0, 0)) * kernels::kWidth + l] = l + 1.0;
    a[static_cast<std::size_t>(SymmetricMatrix::index(1, 1)) * kernels::kWidth + l] = l + 2.0;
  }
  const kernels::Ops& act = kernels::active();
  std::vector<double> evals(static_cast<std::size_t>(m) * kernels::kWidth);
  std::vector<double> inv(static_cast<std::size_t>(plen) * kernels::kWidth);
  act.eig_batch(m, a.data(), evals.data());
  act.inv_iaa_batch(m, a.data(), inv.data());
  for (int l = 0; l < kernels::kWidth; ++l) {
    CHECK(evals[0 * kernels::kWidth + l] == doctest::Approx(l + 1.0).epsilon(1e-14));
    CHECK(evals[1 * kernels::kWidth + l] == doctest::Approx(l + 2.0).epsilon(1e-14));
    const double d0 = l + 1.0, d1 = l + 2.0;
    CHECK(inv[static_cast<std::size_t>(SymmetricMatrix::index(0, 0)) * kernels::kWidth + l] ==
          doctest::Approx(1.0 / (1.0 + d0 * d0)).epsilon(1e-13));
    CHECK(inv[static_cast<std::size_t>(SymmetricMatrix::index(1, 1)) * kernels::kWidth + l] ==
          doctest::Approx(1.0 / (1.0 + d1 * d1)).epsilon(1e-13));
    CHECK(std::fabs(inv[static_cast<std::size_t>(SymmetricMatrix::index(1, 0)) *
                            kernels::kWidth +
                        l]) <= 1e-14);
  }
}

TEST_CASE("runtime selection honors availability") {
  KernelGuard guard;

  CHECK(kernels::select("scalar"));
  CHECK(kernels::active_name() == "scalar");

  CHECK(kernels::select("auto"));
  if (kernels::avx2_available()) {
    CHECK(kernels::active_name() == "avx2");
    CHECK(kernels::select("avx2"));
  } else {
    CHECK(kernels::active_name() == "scalar");
    CHECK_FALSE(kernels::select("avx2"));
    CHECK(kernels::active_name() == "scalar");
  }

  const std::string before{kernels::active_name()};
  CHECK_FALSE(kernels::select("sse9"));
  CHECK(kernels::active_name() == before);
}

TEST_CASE("scalar_ops always reports itself") {
  CHECK(std::string{kernels::scalar_ops().name} == "scalar");
}
