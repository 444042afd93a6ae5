#include <cmath>

#include "diffapprox/simd/kernels.hpp"

namespace diffapprox::simd::scalar {

void limit_step(const LimitStepArgs& a, std::size_t begin, std::size_t end) {
  const std::size_t L = a.lanes;
  for (std::size_t r = begin; r < end; ++r) {
    std::size_t best = 0;
    double best_val = a.alpha[0] * a.x[r];
    for (std::size_t i = 1; i < a.d; ++i) {
      const double v = a.alpha[i] * a.x[i * L + r];
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    for (std::size_t i = 0; i < a.d; ++i) {
      double& xi = a.x[i * L + r];
      const double routed = (i == best) ? a.mu0 : 0.0;
      const double b = (routed + a.mu[i]) - xi;
      const double s = (xi >= a.nu[i]) ? a.above[i] : a.below[i];
      xi = xi + (b * a.h + s * (a.sqrt_h * a.z[i * L + r]));
    }
  }
}

std::size_t count_near_G(const NearGArgs& a, std::size_t begin, std::size_t end) {
  std::size_t count = 0;
  for (std::size_t k = begin; k < end; ++k) {
    double dist = INFINITY;
    for (std::size_t i = 0; i < a.d; ++i) {
      const double xi = a.x[i * a.stride + k];
      dist = std::fmin(dist, std::fabs(xi - a.nu[i]));
      for (std::size_t j = i + 1; j < a.d; ++j) {
        dist = std::fmin(dist, std::fabs(a.alpha[i] * xi - a.alpha[j] * a.x[j * a.stride + k]));
      }
    }
    if (dist < a.eps) ++count;
  }
  return count;
}

}  // namespace diffapprox::simd::scalar
