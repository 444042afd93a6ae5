#include <cstdlib>
#include <string>

#include "diffapprox/simd/kernels.hpp"

namespace diffapprox::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(DIFFAPPROX_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(DIFFAPPROX_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa detect() {
  if (const char* env = std::getenv("DIFFAPPROX_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa)) return isa_available(isa) ? isa : Isa::Scalar;
    }
  }
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

void limit_step(Isa isa, const LimitStepArgs& args) {
  switch (isa) {
#if defined(DIFFAPPROX_HAVE_AVX2)
    case Isa::Avx2:
      if (isa_available(Isa::Avx2)) return avx2::limit_step(args);
      break;
#endif
#if defined(DIFFAPPROX_HAVE_NEON)
    case Isa::Neon: return neon::limit_step(args);
#endif
    default: break;
  }
  scalar::limit_step(args, 0, args.lanes);
}

std::size_t count_near_G(Isa isa, const NearGArgs& args) {
  switch (isa) {
#if defined(DIFFAPPROX_HAVE_AVX2)
    case Isa::Avx2:
      if (isa_available(Isa::Avx2)) return avx2::count_near_G(args);
      break;
#endif
#if defined(DIFFAPPROX_HAVE_NEON)
    case Isa::Neon: return neon::count_near_G(args);
#endif
    default: break;
  }
  return scalar::count_near_G(args, 0, args.count);
}

}  // namespace diffapprox::simd
