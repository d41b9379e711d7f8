#include <cstdlib>
#include <string_view>

#include "kernels.hpp"

namespace forge::simd {

namespace {

bool cpu_has_avx2() {
#if defined(FORGE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  const char* force = std::getenv("FORGE_SIMD");
  if (force && std::string_view(force) == "scalar") return scalar_kernels();
  const auto tables = available_kernels();
  return *tables.back();
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(FORGE_HAVE_AVX2)
  if (cpu_has_avx2()) out.push_back(&detail::avx2_kernels());
#endif
#if defined(FORGE_HAVE_NEON)
  out.push_back(&detail::neon_kernels());
#endif
  return out;
}

const KernelTable& kernels() {
  static const KernelTable& active = select();
  return active;
}

}  // namespace forge::simd
