#include <arm_neon.h>

#include "diffapprox/simd/kernels.hpp"

namespace diffapprox::simd::neon {

void limit_step(const LimitStepArgs& a) {
  const std::size_t L = a.lanes;
  const std::size_t vec_end = L - L % 2;
  const float64x2_t vh = vdupq_n_f64(a.h);
  const float64x2_t vsqrt_h = vdupq_n_f64(a.sqrt_h);
  const float64x2_t vmu0 = vdupq_n_f64(a.mu0);
  const float64x2_t zero = vdupq_n_f64(0.0);

  for (std::size_t r = 0; r < vec_end; r += 2) {
    float64x2_t best_val = vmulq_f64(vdupq_n_f64(a.alpha[0]), vld1q_f64(a.x + r));
    float64x2_t best_idx = zero;
    for (std::size_t i = 1; i < a.d; ++i) {
      const float64x2_t v = vmulq_f64(vdupq_n_f64(a.alpha[i]), vld1q_f64(a.x + i * L + r));
      const uint64x2_t lt = vcltq_f64(v, best_val);
      best_val = vbslq_f64(lt, v, best_val);
      best_idx = vbslq_f64(lt, vdupq_n_f64(static_cast<double>(i)), best_idx);
    }
    for (std::size_t i = 0; i < a.d; ++i) {
      double* xp = a.x + i * L + r;
      const float64x2_t xi = vld1q_f64(xp);
      const uint64x2_t is_best = vceqq_f64(best_idx, vdupq_n_f64(static_cast<double>(i)));
      const float64x2_t routed = vbslq_f64(is_best, vmu0, zero);
      const float64x2_t b = vsubq_f64(vaddq_f64(routed, vdupq_n_f64(a.mu[i])), xi);
      const uint64x2_t ge = vcgeq_f64(xi, vdupq_n_f64(a.nu[i]));
      const float64x2_t s = vbslq_f64(ge, vdupq_n_f64(a.above[i]), vdupq_n_f64(a.below[i]));
      const float64x2_t noise = vmulq_f64(s, vmulq_f64(vsqrt_h, vld1q_f64(a.z + i * L + r)));
      vst1q_f64(xp, vaddq_f64(xi, vaddq_f64(vmulq_f64(b, vh), noise)));
    }
  }
  scalar::limit_step(a, vec_end, L);
}

std::size_t count_near_G(const NearGArgs& a) {
  const std::size_t vec_end = a.count - a.count % 2;
  const float64x2_t veps = vdupq_n_f64(a.eps);
  std::size_t count = 0;
  for (std::size_t k = 0; k < vec_end; k += 2) {
    float64x2_t dist = vdupq_n_f64(__builtin_inf());
    for (std::size_t i = 0; i < a.d; ++i) {
      const float64x2_t xi = vld1q_f64(a.x + i * a.stride + k);
      dist = vminq_f64(dist, vabsq_f64(vsubq_f64(xi, vdupq_n_f64(a.nu[i]))));
      const float64x2_t axi = vmulq_f64(vdupq_n_f64(a.alpha[i]), xi);
      for (std::size_t j = i + 1; j < a.d; ++j) {
        const float64x2_t axj = vmulq_f64(vdupq_n_f64(a.alpha[j]), vld1q_f64(a.x + j * a.stride + k));
        dist = vminq_f64(dist, vabsq_f64(vsubq_f64(axi, axj)));
      }
    }
    const uint64x2_t lt = vcltq_f64(dist, veps);
    count += (vgetq_lane_u64(lt, 0) ? 1 : 0) + (vgetq_lane_u64(lt, 1) ? 1 : 0);
  }
  return count + scalar::count_near_G(a, vec_end, a.count);
}

}  // namespace diffapprox::simd::neon
