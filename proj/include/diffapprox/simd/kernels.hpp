#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops with a scalar reference and vector variants.
//
// Every variant performs the same IEEE operations in the same order as the
// scalar reference (the build disables FP contraction), so results are
// bit-identical across ISAs and dispatch never changes program output.

namespace diffapprox::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

// Best ISA supported by the build and the running CPU. DIFFAPPROX_SIMD=scalar|avx2|neon
// overrides the choice (an unsupported request falls back to scalar).
Isa active_isa();
bool isa_available(Isa isa);

/// One Euler-Maruyama step for `lanes` replicas of the routed-drift family
///   dx_i = (mu0 * 1{i = argmin_k alpha_k x_k} + mu_i - x_i) dt + s_i(x_i) dw_i,
///   s_i(x_i) = x_i >= nu_i ? above_i : below_i.
/// State and normals are coordinate-major: x[i * lanes + r].
struct LimitStepArgs {
  std::size_t d = 0;
  std::size_t lanes = 0;
  double* x = nullptr;
  const double* z = nullptr;
  const double* alpha = nullptr;
  const double* mu = nullptr;
  const double* nu = nullptr;
  const double* below = nullptr;
  const double* above = nullptr;
  double mu0 = 0.0;
  double h = 0.0;
  double sqrt_h = 0.0;
};

void limit_step(Isa isa, const LimitStepArgs& args);

/// Number of points k < count with distance_to_G(x_k) < eps, where
/// x[i * stride + k] holds coordinate i of point k.
struct NearGArgs {
  std::size_t d = 0;
  std::size_t count = 0;
  std::size_t stride = 0;
  const double* x = nullptr;
  const double* alpha = nullptr;
  const double* nu = nullptr;
  double eps = 0.0;
};

std::size_t count_near_G(Isa isa, const NearGArgs& args);

namespace scalar {
void limit_step(const LimitStepArgs& args, std::size_t begin, std::size_t end);
std::size_t count_near_G(const NearGArgs& args, std::size_t begin, std::size_t end);
}  // namespace scalar

#if defined(DIFFAPPROX_HAVE_AVX2)
namespace avx2 {
void limit_step(const LimitStepArgs& args);
std::size_t count_near_G(const NearGArgs& args);
}  // namespace avx2
#endif

#if defined(DIFFAPPROX_HAVE_NEON)
namespace neon {
void limit_step(const LimitStepArgs& args);
std::size_t count_near_G(const NearGArgs& args);
}  // namespace neon
#endif

}  // namespace diffapprox::simd
