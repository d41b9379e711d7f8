/**
 * @file simd.hpp
 * @brief Data-parallel inner loops with scalar reference and vector variants.
 *
 * Every kernel exists once per instruction set; `kernels()` picks the best
 * table the running CPU supports (override with FORGE_SIMD=scalar).
 * Element-wise kernels are bit-identical across tables because the scalar
 * reference uses fused multiply-add where the vector code does; reductions
 * may differ in summation order.
 */
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace forge::simd {

struct MinMax {
  float min;
  float max;
};

struct KernelTable {
  std::string_view name;
  /// dst[i] = fma(w, src[i], dst[i])
  void (*axpy_f32)(float* dst, const float* src, float w, std::size_t n);
  /// dst[i] += src[i]
  void (*add_f64)(double* dst, const double* src, std::size_t n);
  /// dst[i] /= d
  void (*div_f64)(double* dst, double d, std::size_t n);
  /// out[i] = fma(weight[i], fma(stddev, z[i], mean), out[i])
  void (*mixture_accumulate)(double* out, const double* weight, const float* z,
                             double mean, double stddev, std::size_t n);
  /// dst[i] *= src[i]
  void (*mul_f32)(float* dst, const float* src, std::size_t n);
  /// dst[i] = min(max(dst[i], lo), hi)
  void (*clamp_f32)(float* dst, float lo, float hi, std::size_t n);
  /// dst[i] = (dst[i] - lo) / range
  void (*normalize_f32)(float* dst, float lo, float range, std::size_t n);
  MinMax (*minmax_f32)(const float* src, std::size_t n);
  /// Sum with double accumulation.
  double (*sum_f32)(const float* src, std::size_t n);
};

const KernelTable& scalar_kernels();
/// Tables compiled for this architecture and usable on this CPU, scalar first.
std::vector<const KernelTable*> available_kernels();
/// Active table, chosen once per process.
const KernelTable& kernels();

}  // namespace forge::simd
