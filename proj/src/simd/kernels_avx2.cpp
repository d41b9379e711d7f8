// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels.hpp"

namespace forge::simd::detail {

namespace {

void axpy_f32(float* dst, const float* src, float w, std::size_t n) {
  const __m256 vw = _mm256_set1_ps(w);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_loadu_ps(dst + i);
    _mm256_storeu_ps(dst + i, _mm256_fmadd_ps(vw, _mm256_loadu_ps(src + i), d));
  }
  for (; i < n; ++i) dst[i] = std::fma(w, src[i], dst[i]);
}

void add_f64(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
  }
  for (; i < n; ++i) dst[i] += src[i];
}

void div_f64(double* dst, double d, std::size_t n) {
  const __m256d vd = _mm256_set1_pd(d);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_div_pd(_mm256_loadu_pd(dst + i), vd));
  }
  for (; i < n; ++i) dst[i] /= d;
}

void mixture_accumulate(double* out, const double* weight, const float* z,
                        double mean, double stddev, std::size_t n) {
  const __m256d vm = _mm256_set1_pd(mean);
  const __m256d vs = _mm256_set1_pd(stddev);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d zz = _mm256_cvtps_pd(_mm_loadu_ps(z + i));
    const __m256d signal = _mm256_fmadd_pd(vs, zz, vm);
    const __m256d acc = _mm256_loadu_pd(out + i);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(weight + i), signal, acc));
  }
  for (; i < n; ++i) {
    out[i] = std::fma(weight[i], std::fma(stddev, static_cast<double>(z[i]), mean), out[i]);
  }
}

void mul_f32(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(dst + i), _mm256_loadu_ps(src + i)));
  }
  for (; i < n; ++i) dst[i] *= src[i];
}

void clamp_f32(float* dst, float lo, float hi, std::size_t n) {
  const __m256 vlo = _mm256_set1_ps(lo);
  const __m256 vhi = _mm256_set1_ps(hi);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_max_ps(_mm256_loadu_ps(dst + i), vlo);
    _mm256_storeu_ps(dst + i, _mm256_min_ps(v, vhi));
  }
  for (; i < n; ++i) {
    const float v = dst[i] > lo ? dst[i] : lo;
    dst[i] = v < hi ? v : hi;
  }
}

void normalize_f32(float* dst, float lo, float range, std::size_t n) {
  const __m256 vlo = _mm256_set1_ps(lo);
  const __m256 vr = _mm256_set1_ps(range);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_div_ps(_mm256_sub_ps(_mm256_loadu_ps(dst + i), vlo), vr));
  }
  for (; i < n; ++i) dst[i] = (dst[i] - lo) / range;
}

MinMax minmax_f32(const float* src, std::size_t n) {
  MinMax r{src[0], src[0]};
  std::size_t i = 0;
  if (n >= 8) {
    __m256 vmin = _mm256_loadu_ps(src);
    __m256 vmax = vmin;
    for (i = 8; i + 8 <= n; i += 8) {
      const __m256 v = _mm256_loadu_ps(src + i);
      vmin = _mm256_min_ps(vmin, v);
      vmax = _mm256_max_ps(vmax, v);
    }
    alignas(32) float lo[8], hi[8];
    _mm256_store_ps(lo, vmin);
    _mm256_store_ps(hi, vmax);
    r = {lo[0], hi[0]};
    for (int k = 1; k < 8; ++k) {
      r.min = std::min(r.min, lo[k]);
      r.max = std::max(r.max, hi[k]);
    }
  }
  for (; i < n; ++i) {
    r.min = std::min(r.min, src[i]);
    r.max = std::max(r.max, src[i]);
  }
  return r;
}

double sum_f32(const float* src, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(src + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += src[i];
  return s;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      "avx2",        axpy_f32,  add_f64,       div_f64,    mixture_accumulate,
      mul_f32,       clamp_f32, normalize_f32, minmax_f32, sum_f32};
  return table;
}

}  // namespace forge::simd::detail
