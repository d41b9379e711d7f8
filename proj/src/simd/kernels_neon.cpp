// AArch64 variant; NEON is part of the baseline ISA there.
#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "kernels.hpp"

namespace forge::simd::detail {

namespace {

void axpy_f32(float* dst, const float* src, float w, std::size_t n) {
  const float32x4_t vw = vdupq_n_f32(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    vst1q_f32(dst + i, vfmaq_f32(vld1q_f32(dst + i), vw, vld1q_f32(src + i)));
  }
  for (; i < n; ++i) dst[i] = std::fma(w, src[i], dst[i]);
}

void add_f64(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vaddq_f64(vld1q_f64(dst + i), vld1q_f64(src + i)));
  for (; i < n; ++i) dst[i] += src[i];
}

void div_f64(double* dst, double d, std::size_t n) {
  const float64x2_t vd = vdupq_n_f64(d);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vdivq_f64(vld1q_f64(dst + i), vd));
  for (; i < n; ++i) dst[i] /= d;
}

void mixture_accumulate(double* out, const double* weight, const float* z,
                        double mean, double stddev, std::size_t n) {
  const float64x2_t vm = vdupq_n_f64(mean);
  const float64x2_t vs = vdupq_n_f64(stddev);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t zz = vcvt_f64_f32(vld1_f32(z + i));
    const float64x2_t signal = vfmaq_f64(vm, vs, zz);
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(out + i), vld1q_f64(weight + i), signal));
  }
  for (; i < n; ++i) {
    out[i] = std::fma(weight[i], std::fma(stddev, static_cast<double>(z[i]), mean), out[i]);
  }
}

void mul_f32(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_f32(vld1q_f32(dst + i), vld1q_f32(src + i)));
  for (; i < n; ++i) dst[i] *= src[i];
}

void clamp_f32(float* dst, float lo, float hi, std::size_t n) {
  const float32x4_t vlo = vdupq_n_f32(lo);
  const float32x4_t vhi = vdupq_n_f32(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vminq_f32(vmaxq_f32(vld1q_f32(dst + i), vlo), vhi));
  for (; i < n; ++i) {
    const float v = dst[i] > lo ? dst[i] : lo;
    dst[i] = v < hi ? v : hi;
  }
}

void normalize_f32(float* dst, float lo, float range, std::size_t n) {
  const float32x4_t vlo = vdupq_n_f32(lo);
  const float32x4_t vr = vdupq_n_f32(range);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vdivq_f32(vsubq_f32(vld1q_f32(dst + i), vlo), vr));
  for (; i < n; ++i) dst[i] = (dst[i] - lo) / range;
}

MinMax minmax_f32(const float* src, std::size_t n) {
  MinMax r{src[0], src[0]};
  std::size_t i = 0;
  if (n >= 4) {
    float32x4_t vmin = vld1q_f32(src), vmax = vmin;
    for (i = 4; i + 4 <= n; i += 4) {
      const float32x4_t v = vld1q_f32(src + i);
      vmin = vminq_f32(vmin, v);
      vmax = vmaxq_f32(vmax, v);
    }
    r = {vminvq_f32(vmin), vmaxvq_f32(vmax)};
  }
  for (; i < n; ++i) {
    r.min = std::min(r.min, src[i]);
    r.max = std::max(r.max, src[i]);
  }
  return r;
}

double sum_f32(const float* src, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(src + i);
    acc0 = vaddq_f64(acc0, vcvt_f64_f32(vget_low_f32(v)));
    acc1 = vaddq_f64(acc1, vcvt_high_f64_f32(v));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += src[i];
  return s;
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{
      "neon",        axpy_f32,  add_f64,       div_f64,    mixture_accumulate,
      mul_f32,       clamp_f32, normalize_f32, minmax_f32, sum_f32};
  return table;
}

}  // namespace forge::simd::detail
