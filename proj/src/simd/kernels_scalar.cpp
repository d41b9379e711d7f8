#include <algorithm>
#include <cmath>

#include "kernels.hpp"

namespace forge::simd {

namespace {

void axpy_f32(float* dst, const float* src, float w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::fma(w, src[i], dst[i]);
}

void add_f64(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void div_f64(double* dst, double d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] /= d;
}

void mixture_accumulate(double* out, const double* weight, const float* z,
                        double mean, double stddev, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::fma(weight[i], std::fma(stddev, static_cast<double>(z[i]), mean), out[i]);
  }
}

void mul_f32(float* dst, const float* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] *= src[i];
}

void clamp_f32(float* dst, float lo, float hi, std::size_t n) {
  // Same selection rule as the vector max/min instructions (signed zeros).
  for (std::size_t i = 0; i < n; ++i) {
    const float v = dst[i] > lo ? dst[i] : lo;
    dst[i] = v < hi ? v : hi;
  }
}

void normalize_f32(float* dst, float lo, float range, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = (dst[i] - lo) / range;
}

MinMax minmax_f32(const float* src, std::size_t n) {
  MinMax r{src[0], src[0]};
  for (std::size_t i = 1; i < n; ++i) {
    r.min = std::min(r.min, src[i]);
    r.max = std::max(r.max, src[i]);
  }
  return r;
}

double sum_f32(const float* src, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += src[i];
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",      axpy_f32,  add_f64,       div_f64,    mixture_accumulate,
      mul_f32,       clamp_f32, normalize_f32, minmax_f32, sum_f32};
  return table;
}

}  // namespace forge::simd
