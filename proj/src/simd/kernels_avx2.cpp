// Compiled with -mavx2 only; callers reach it through the runtime dispatcher.
#include <immintrin.h>

#include <cmath>

#include "diffapprox/simd/kernels.hpp"

namespace diffapprox::simd::avx2 {

void limit_step(const LimitStepArgs& a) {
  const std::size_t L = a.lanes;
  const std::size_t vec_end = L - L % 4;
  const __m256d vh = _mm256_set1_pd(a.h);
  const __m256d vsqrt_h = _mm256_set1_pd(a.sqrt_h);
  const __m256d vmu0 = _mm256_set1_pd(a.mu0);
  const __m256d zero = _mm256_setzero_pd();

  for (std::size_t r = 0; r < vec_end; r += 4) {
    __m256d best_val = _mm256_mul_pd(_mm256_set1_pd(a.alpha[0]), _mm256_loadu_pd(a.x + r));
    __m256d best_idx = zero;
    for (std::size_t i = 1; i < a.d; ++i) {
      const __m256d v = _mm256_mul_pd(_mm256_set1_pd(a.alpha[i]), _mm256_loadu_pd(a.x + i * L + r));
      const __m256d lt = _mm256_cmp_pd(v, best_val, _CMP_LT_OQ);
      best_val = _mm256_blendv_pd(best_val, v, lt);
      best_idx = _mm256_blendv_pd(best_idx, _mm256_set1_pd(static_cast<double>(i)), lt);
    }
    for (std::size_t i = 0; i < a.d; ++i) {
      double* xp = a.x + i * L + r;
      const __m256d xi = _mm256_loadu_pd(xp);
      const __m256d is_best = _mm256_cmp_pd(best_idx, _mm256_set1_pd(static_cast<double>(i)), _CMP_EQ_OQ);
      const __m256d routed = _mm256_blendv_pd(zero, vmu0, is_best);
      const __m256d b = _mm256_sub_pd(_mm256_add_pd(routed, _mm256_set1_pd(a.mu[i])), xi);
      const __m256d ge = _mm256_cmp_pd(xi, _mm256_set1_pd(a.nu[i]), _CMP_GE_OQ);
      const __m256d s = _mm256_blendv_pd(_mm256_set1_pd(a.below[i]), _mm256_set1_pd(a.above[i]), ge);
      const __m256d noise = _mm256_mul_pd(s, _mm256_mul_pd(vsqrt_h, _mm256_loadu_pd(a.z + i * L + r)));
      _mm256_storeu_pd(xp, _mm256_add_pd(xi, _mm256_add_pd(_mm256_mul_pd(b, vh), noise)));
    }
  }
  scalar::limit_step(a, vec_end, L);
}

namespace {

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

std::size_t count_near_G(const NearGArgs& a) {
  const std::size_t vec_end = a.count - a.count % 4;
  const __m256d veps = _mm256_set1_pd(a.eps);
  std::size_t count = 0;
  for (std::size_t k = 0; k < vec_end; k += 4) {
    __m256d dist = _mm256_set1_pd(INFINITY);
    for (std::size_t i = 0; i < a.d; ++i) {
      const __m256d xi = _mm256_loadu_pd(a.x + i * a.stride + k);
      dist = _mm256_min_pd(dist, abs_pd(_mm256_sub_pd(xi, _mm256_set1_pd(a.nu[i]))));
      const __m256d axi = _mm256_mul_pd(_mm256_set1_pd(a.alpha[i]), xi);
      for (std::size_t j = i + 1; j < a.d; ++j) {
        const __m256d axj = _mm256_mul_pd(_mm256_set1_pd(a.alpha[j]), _mm256_loadu_pd(a.x + j * a.stride + k));
        dist = _mm256_min_pd(dist, abs_pd(_mm256_sub_pd(axi, axj)));
      }
    }
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(dist, veps, _CMP_LT_OQ));
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
  }
  return count + scalar::count_near_G(a, vec_end, a.count);
}

}  // namespace diffapprox::simd::avx2
