#include "slg/kernels.hpp"

namespace slg::kernels {

#ifdef SLG_HAVE_AVX2
const Ops& avx2_ops_impl();
#endif

bool avx2_available() {
#if defined(SLG_HAVE_AVX2) && defined(__x86_64__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

namespace {

const Ops* best_available() {
#ifdef SLG_HAVE_AVX2
  if (avx2_available()) return &avx2_ops_impl();
#endif
  return &scalar_ops();
}

const Ops*& active_slot() {
  static const Ops* slot = best_available();
  return slot;
}

}  // namespace

const Ops& active() { return *active_slot(); }

std::string_view active_name() { return active().name; }

bool select(std::string_view mode) {
  if (mode == "auto") {
    active_slot() = best_available();
    return true;
  }
  if (mode == "scalar") {
    active_slot() = &scalar_ops();
    return true;
  }
  if (mode == "avx2") {
#ifdef SLG_HAVE_AVX2
    if (avx2_available()) {
      active_slot() = &avx2_ops_impl();
      return true;
    }
#endif
    return false;
  }
  return false;
}

}  // namespace slg::kernels
