#include "forge/resample.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numbers>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/simd.hpp"

namespace forge {

namespace {

/// Fixed-width tap table for one axis: output o reads
/// idx[o * width + t] with weight w[o * width + t] (indices local to the
/// input buffer).
struct AxisTaps {
  std::size_t out_count = 0;
  int width = 0;
  std::vector<std::size_t> idx;
  std::vector<float> w;
};

int support_radius(Interpolation interp) {
  switch (interp) {
    case Interpolation::windowed_sinc: return kLanczosRadius;
    case Interpolation::linear: return 1;
    case Interpolation::nearest: return 1;
  }
  return kLanczosRadius;
}

/// Taps for target indices [t0, t1] sampling a source axis whose valid
/// range is [lo, hi] (global indices); `ratio` = target / source spacing.
AxisTaps interpolation_taps(Interpolation interp, double ratio, long t0, long t1, long lo,
                            long hi) {
  AxisTaps taps;
  taps.out_count = static_cast<std::size_t>(t1 - t0 + 1);
  taps.width = interp == Interpolation::windowed_sinc ? 2 * kLanczosRadius
               : interp == Interpolation::linear      ? 2
                                                      : 1;
  taps.idx.resize(taps.out_count * taps.width);
  taps.w.resize(taps.out_count * taps.width);
  auto clamp_local = [&](long i) {
    return static_cast<std::size_t>(std::clamp(i, lo, hi) - lo);
  };
  for (long o = t0; o <= t1; ++o) {
    const double s = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const std::size_t base = static_cast<std::size_t>(o - t0) * taps.width;
    if (interp == Interpolation::nearest) {
      // Round half down so that exact midpoints resolve deterministically.
      taps.idx[base] = clamp_local(static_cast<long>(std::ceil(s - 0.5)));
      taps.w[base] = 1.0f;
      continue;
    }
    const long f = static_cast<long>(std::floor(s));
    const double frac = s - static_cast<double>(f);
    if (interp == Interpolation::linear) {
      taps.idx[base] = clamp_local(f);
      taps.idx[base + 1] = clamp_local(f + 1);
      taps.w[base] = static_cast<float>(1.0 - frac);
      taps.w[base + 1] = static_cast<float>(frac);
      continue;
    }
    double weights[2 * kLanczosRadius];
    double total = 0.0;
    for (int t = 0; t < taps.width; ++t) {
      const long i = f - kLanczosRadius + 1 + t;
      weights[t] = lanczos(s - static_cast<double>(i));
      total += weights[t];
      taps.idx[base + t] = clamp_local(i);
    }
    for (int t = 0; t < taps.width; ++t) taps.w[base + t] = static_cast<float>(weights[t] / total);
  }
  return taps;
}

std::size_t reflect(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

AxisTaps smoothing_taps(const std::vector<float>& kernel, std::size_t n) {
  AxisTaps taps;
  const long radius = static_cast<long>(kernel.size() / 2);
  taps.out_count = n;
  taps.width = static_cast<int>(kernel.size());
  taps.idx.resize(n * kernel.size());
  taps.w.resize(n * kernel.size());
  for (std::size_t o = 0; o < n; ++o) {
    for (int t = 0; t < taps.width; ++t) {
      taps.idx[o * taps.width + t] =
          reflect(static_cast<long>(o) + t - radius, static_cast<long>(n));
      taps.w[o * taps.width + t] = kernel[t];
    }
  }
  return taps;
}

/// Applies taps along `axis`; out has dims `d` with d[axis] replaced by
/// taps.out_count.
std::vector<float> apply_axis(const std::vector<float>& in, const Dims3& d, int axis,
                              const AxisTaps& taps, Dims3& out_dims) {
  const auto& k = simd::kernels();
  out_dims = d;
  out_dims[axis] = taps.out_count;
  std::vector<float> out(out_dims[0] * out_dims[1] * out_dims[2], 0.0f);
  const int width = taps.width;
  if (axis == 2) {
    const std::size_t plane = d[0] * d[1];
    for (std::size_t o = 0; o < taps.out_count; ++o) {
      float* dst = out.data() + o * plane;
      for (int t = 0; t < width; ++t) {
        const float w = taps.w[o * width + t];
        if (w != 0.0f) k.axpy_f32(dst, in.data() + taps.idx[o * width + t] * plane, w, plane);
      }
    }
  } else if (axis == 1) {
    const std::size_t row = d[0];
    for (std::size_t z = 0; z < d[2]; ++z) {
      const float* src = in.data() + z * d[0] * d[1];
      float* dst_slab = out.data() + z * d[0] * out_dims[1];
      for (std::size_t o = 0; o < taps.out_count; ++o) {
        float* dst = dst_slab + o * row;
        for (int t = 0; t < width; ++t) {
          const float w = taps.w[o * width + t];
          if (w != 0.0f) k.axpy_f32(dst, src + taps.idx[o * width + t] * row, w, row);
        }
      }
    }
  } else {
    const std::size_t rows = d[1] * d[2];
    for (std::size_t r = 0; r < rows; ++r) {
      const float* src = in.data() + r * d[0];
      float* dst = out.data() + r * out_dims[0];
      for (std::size_t o = 0; o < taps.out_count; ++o) {
        float acc = 0.0f;
        const std::size_t* idx = taps.idx.data() + o * width;
        const float* w = taps.w.data() + o * width;
        for (int t = 0; t < width; ++t) acc = std::fma(w[t], src[idx[t]], acc);
        dst[o] = acc;
      }
    }
  }
  return out;
}

/// x-axis smoothing through a reflected line buffer so every tap is a
/// contiguous axpy.
void smooth_x(std::vector<float>& data, const Dims3& d, const std::vector<float>& kernel) {
  const auto& k = simd::kernels();
  const long radius = static_cast<long>(kernel.size() / 2);
  const long n = static_cast<long>(d[0]);
  std::vector<float> line(static_cast<std::size_t>(n + 2 * radius));
  std::vector<float> acc(d[0]);
  const std::size_t rows = d[1] * d[2];
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = data.data() + r * d[0];
    for (long i = -radius; i < n + radius; ++i) line[i + radius] = row[reflect(i, n)];
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t t = 0; t < kernel.size(); ++t) {
      k.axpy_f32(acc.data(), line.data() + t, kernel[t], d[0]);
    }
    std::copy(acc.begin(), acc.end(), row);
  }
}

void smooth_buffer(std::vector<float>& data, const Dims3& d,
                   const std::array<std::vector<float>, 3>& kernels) {
  if (kernels[0].size() > 1) smooth_x(data, d, kernels[0]);
  for (int axis = 1; axis < 3; ++axis) {
    if (kernels[axis].size() <= 1) continue;
    Dims3 out_dims;
    data = apply_axis(data, d, axis, smoothing_taps(kernels[axis], d[axis]), out_dims);
  }
}

std::array<std::vector<float>, 3> axis_kernels(const Vec3& voxel_size, double sigma_mm) {
  std::array<std::vector<float>, 3> out;
  for (int a = 0; a < 3; ++a) {
    out[a] = sigma_mm > 0.0 ? gaussian_kernel(sigma_mm / voxel_size[a]) : std::vector<float>{1.0f};
  }
  return out;
}

double axis_ratio(const Geometry& src, const Geometry& dst, int a) {
  return dst.voxel_size()[a] / src.voxel_size()[a];
}

struct Box {
  std::array<long, 3> lo{0, 0, 0};
  std::array<long, 3> hi{-1, -1, -1};
  bool empty() const { return hi[0] < lo[0]; }
};

/// Sub-box of one channel's super-resolved values.
struct ChannelPatch {
  std::array<long, 3> t0{};
  Dims3 dims{};
  std::vector<float> values;
};

ChannelPatch superresolve_channel(const LabelVolume& classes, Label cls, const Box& box,
                                  const Geometry& dst, const ResampleSpec& spec,
                                  const std::array<std::vector<float>, 3>& kernels) {
  const Geometry& src = classes.geometry();
  const Dims3& ns = src.dims();
  const Dims3& nt = dst.dims();
  std::array<long, 3> lo{}, hi{}, t0{}, t1{};
  for (int a = 0; a < 3; ++a) {
    const double r = axis_ratio(src, dst, a);
    const long radius_t = static_cast<long>(kernels[a].size() / 2);
    const long margin = support_radius(spec.interpolation) + 2 +
                        static_cast<long>(std::ceil((radius_t + 2) * r));
    lo[a] = std::max(0L, box.lo[a] - margin);
    hi[a] = std::min(static_cast<long>(ns[a]) - 1, box.hi[a] + margin);
    t0[a] = lo[a] == 0 ? 0 : static_cast<long>(std::ceil(lo[a] / r - 0.5 - 1e-9));
    t1[a] = hi[a] == static_cast<long>(ns[a]) - 1
                ? static_cast<long>(nt[a]) - 1
                : static_cast<long>(std::floor((hi[a] + 1) / r - 0.5 + 1e-9));
    t0[a] = std::clamp(t0[a], 0L, static_cast<long>(nt[a]) - 1);
    t1[a] = std::clamp(t1[a], t0[a], static_cast<long>(nt[a]) - 1);
  }
  Dims3 d{static_cast<std::size_t>(hi[0] - lo[0] + 1), static_cast<std::size_t>(hi[1] - lo[1] + 1),
          static_cast<std::size_t>(hi[2] - lo[2] + 1)};
  std::vector<float> buf(d[0] * d[1] * d[2]);
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        buf[x + d[0] * (y + d[1] * z)] =
            classes.at(x + lo[0], y + lo[1], z + lo[2]) == cls ? 1.0f : 0.0f;
      }
    }
  }
  for (int axis : {2, 1, 0}) {
    const AxisTaps taps = interpolation_taps(spec.interpolation, axis_ratio(src, dst, axis),
                                             t0[axis], t1[axis], lo[axis], hi[axis]);
    Dims3 out_dims;
    buf = apply_axis(buf, d, axis, taps, out_dims);
    d = out_dims;
  }
  simd::kernels().clamp_f32(buf.data(), 0.0f, 1.0f, buf.size());
  smooth_buffer(buf, d, kernels);
  return {t0, d, std::move(buf)};
}

}  // namespace

Interpolation parse_interpolation(const std::string& name) {
  if (name == "windowed_sinc" || name == "sinc" || name == "lanczos") return Interpolation::windowed_sinc;
  if (name == "linear") return Interpolation::linear;
  if (name == "nearest") return Interpolation::nearest;
  throw ParameterError("unknown interpolation '" + name +
                       "' (expected windowed_sinc, linear or nearest)");
}

const char* to_string(Interpolation interp) {
  switch (interp) {
    case Interpolation::windowed_sinc: return "windowed_sinc";
    case Interpolation::linear: return "linear";
    case Interpolation::nearest: return "nearest";
  }
  return "windowed_sinc";
}

void ResampleSpec::validate() const {
  for (double v : target_voxel_size) {
    if (!(v > 0.0)) throw ParameterError("resample: target voxel size must be positive");
  }
  if (!(smoothing_sigma_mm >= 0.0)) {
    throw ParameterError("resample: smoothing sigma must be non-negative");
  }
}

double lanczos(double x, int a) {
  const double ax = std::abs(x);
  if (ax < 1e-12) return 1.0;
  if (ax >= a) return 0.0;
  const double px = std::numbers::pi * x;
  return a * std::sin(px) * std::sin(px / a) / (px * px);
}

Geometry resampled_geometry(const Geometry& source, const Vec3& voxel_size) {
  Dims3 dims{};
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int a = 0; a < 3; ++a) {
    const double r = voxel_size[a] / source.voxel_size()[a];
    const double extent = static_cast<double>(source.dims()[a]) / r;
    dims[a] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(extent)));
    m(a, a) = r;
    m(a, 3) = 0.5 * r - 0.5;
  }
  return Geometry(dims, source.affine() * m);
}

std::vector<float> gaussian_kernel(double sigma_voxels) {
  if (!(sigma_voxels > 0.0)) return {1.0f};
  const long radius = std::max(1L, static_cast<long>(std::ceil(4.0 * sigma_voxels)));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-0.5 * (i * i) / (sigma_voxels * sigma_voxels));
    total += w[i + radius];
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(w[i] / total);
  return out;
}

IntensityVolume resample_channel(const IntensityVolume& channel, const ResampleSpec& spec) {
  spec.validate();
  const Geometry& src = channel.geometry();
  Geometry dst = resampled_geometry(src, spec.target_voxel_size);
  std::vector<float> buf(channel.values().begin(), channel.values().end());
  Dims3 d = src.dims();
  for (int axis : {2, 1, 0}) {
    const AxisTaps taps =
        interpolation_taps(spec.interpolation, axis_ratio(src, dst, axis), 0,
                           static_cast<long>(dst.dims()[axis]) - 1, 0,
                           static_cast<long>(src.dims()[axis]) - 1);
    Dims3 out_dims;
    buf = apply_axis(buf, d, axis, taps, out_dims);
    d = out_dims;
  }
  return IntensityVolume(std::move(dst), std::move(buf));
}

IntensityVolume gaussian_smooth(const IntensityVolume& channel, double sigma_mm) {
  if (!(sigma_mm >= 0.0)) throw ParameterError("gaussian_smooth: sigma must be non-negative");
  if (sigma_mm == 0.0) return channel;
  std::vector<float> buf(channel.values().begin(), channel.values().end());
  smooth_buffer(buf, channel.geometry().dims(),
                axis_kernels(channel.geometry().voxel_size(), sigma_mm));
  return IntensityVolume(channel.geometry(), std::move(buf));
}

LabelVolume superresolve_labels(const LabelVolume& raw, const LabelTaxonomy& taxonomy,
                                const ResampleSpec& spec) {
  spec.validate();
  const Geometry& src = raw.geometry();
  for (int a = 0; a < 3; ++a) {
    if (spec.target_voxel_size[a] > src.voxel_size()[a] * (1.0 + 1e-9)) {
      throw PreconditionError(
          "superresolve_labels: target voxel size is coarser than the source; "
          "use pool_partial_volume to downsample");
    }
  }
  const LabelVolume classes = map_labels(raw, taxonomy);
  const Geometry dst = resampled_geometry(src, spec.target_voxel_size);
  const auto kernels = axis_kernels(spec.target_voxel_size, spec.smoothing_sigma_mm);
  const std::size_t K = taxonomy.class_count();

  std::vector<Box> boxes(K);
  for (auto& b : boxes) {
    b.lo = {LONG_MAX, LONG_MAX, LONG_MAX};
    b.hi = {-1, -1, -1};
  }
  const Dims3& ns = src.dims();
  for (std::size_t z = 0; z < ns[2]; ++z) {
    for (std::size_t y = 0; y < ns[1]; ++y) {
      for (std::size_t x = 0; x < ns[0]; ++x) {
        Box& b = boxes[classes.at(x, y, z)];
        const long p[3] = {static_cast<long>(x), static_cast<long>(y), static_cast<long>(z)};
        for (int a = 0; a < 3; ++a) {
          b.lo[a] = std::min(b.lo[a], p[a]);
          b.hi[a] = std::max(b.hi[a], p[a]);
        }
      }
    }
  }

  const std::size_t n = dst.voxel_count();
  std::vector<float> best(n, 0.0f);
  std::vector<Label> arg(n, 0);
  const Dims3& nt = dst.dims();
  auto merge = [&](Label cls, const ChannelPatch& p) {
    for (std::size_t z = 0; z < p.dims[2]; ++z) {
      for (std::size_t y = 0; y < p.dims[1]; ++y) {
        const std::size_t out_row = (p.t0[0]) + nt[0] * ((y + p.t0[1]) + nt[1] * (z + p.t0[2]));
        const float* in_row = p.values.data() + p.dims[0] * (y + p.dims[1] * z);
        for (std::size_t x = 0; x < p.dims[0]; ++x) {
          if (in_row[x] > best[out_row + x]) {
            best[out_row + x] = in_row[x];
            arg[out_row + x] = cls;
          }
        }
      }
    }
  };

  // Channels are computed in parallel batches and merged in class order so
  // the tie-break stays deterministic.
  std::vector<Label> present;
  for (std::size_t k = 0; k < K; ++k) {
    if (boxes[k].hi[0] >= 0) present.push_back(static_cast<Label>(k));
  }
  const unsigned workers = default_workers();
  for (std::size_t start = 0; start < present.size(); start += workers) {
    const std::size_t count = std::min<std::size_t>(workers, present.size() - start);
    std::vector<ChannelPatch> patches(count);
    parallel_for(count, workers, [&](std::size_t i) {
      const Label cls = present[start + i];
      patches[i] = superresolve_channel(classes, cls, boxes[cls], dst, spec, kernels);
    });
    for (std::size_t i = 0; i < count; ++i) merge(present[start + i], patches[i]);
  }
  return LabelVolume(dst, std::move(arg));
}

Geometry pooled_geometry(const Geometry& source, const Dims3& factor) {
  Dims3 dims{};
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int a = 0; a < 3; ++a) {
    if (factor[a] == 0) throw ParameterError("pool: factor must be positive");
    dims[a] = (source.dims()[a] + factor[a] - 1) / factor[a];
    m(a, a) = static_cast<double>(factor[a]);
    m(a, 3) = 0.5 * static_cast<double>(factor[a] - 1);
  }
  return Geometry(dims, source.affine() * m);
}

ProbVolume pool_partial_volume(const ProbVolume& prob, const PoolSpec& spec) {
  const Geometry& src = prob.geometry();
  const Geometry dst = pooled_geometry(src, spec.factor);
  const Dims3& ns = src.dims();
  const Dims3& nd = dst.dims();
  const Dims3& f = spec.factor;
  const std::size_t n_src = src.voxel_count();
  const std::size_t n_dst = dst.voxel_count();
  const double block = static_cast<double>(f[0] * f[1] * f[2]);
  const auto& k = simd::kernels();
  std::vector<double> out(n_dst * prob.channels(), 0.0);
  std::vector<double> row_acc(ns[0]);

  for (std::size_t c = 0; c < prob.channels(); ++c) {
    const double* in = prob.values().data() + c * n_src;
    double* o = out.data() + c * n_dst;
    for (std::size_t oz = 0; oz < nd[2]; ++oz) {
      for (std::size_t oy = 0; oy < nd[1]; ++oy) {
        std::fill(row_acc.begin(), row_acc.end(), 0.0);
        for (std::size_t dz = 0; dz < f[2]; ++dz) {
          const std::size_t z = oz * f[2] + dz;
          if (z >= ns[2]) break;
          for (std::size_t dy = 0; dy < f[1]; ++dy) {
            const std::size_t y = oy * f[1] + dy;
            if (y >= ns[1]) break;
            k.add_f64(row_acc.data(), in + ns[0] * (y + ns[1] * z), ns[0]);
          }
        }
        double* orow = o + nd[0] * (oy + nd[1] * oz);
        for (std::size_t ox = 0; ox < nd[0]; ++ox) {
          double s = 0.0;
          for (std::size_t dx = 0; dx < f[0]; ++dx) {
            const std::size_t x = ox * f[0] + dx;
            if (x < ns[0]) s += row_acc[x];
          }
          orow[ox] = s;
        }
      }
    }
  }
  // Padded voxels are background.
  for (std::size_t oz = 0; oz < nd[2]; ++oz) {
    const std::size_t cz = std::min(f[2], ns[2] - oz * f[2]);
    for (std::size_t oy = 0; oy < nd[1]; ++oy) {
      const std::size_t cy = std::min(f[1], ns[1] - oy * f[1]);
      for (std::size_t ox = 0; ox < nd[0]; ++ox) {
        const std::size_t cx = std::min(f[0], ns[0] - ox * f[0]);
        const std::size_t real = cx * cy * cz;
        out[nd[0] * (oy + nd[1] * oz) + ox] += static_cast<double>(f[0] * f[1] * f[2] - real);
      }
    }
  }
  k.div_f64(out.data(), block, out.size());
  return ProbVolume(dst, prob.channels(), std::move(out));
}

ProbVolume pool_labels(const LabelVolume& class_labels, std::size_t classes,
                       const PoolSpec& spec) {
  const Geometry& src = class_labels.geometry();
  const Geometry dst = pooled_geometry(src, spec.factor);
  const Dims3& ns = src.dims();
  const Dims3& nd = dst.dims();
  const Dims3& f = spec.factor;
  const std::size_t n_dst = dst.voxel_count();
  std::vector<double> out(n_dst * classes, 0.0);
  for (std::size_t z = 0; z < nd[2] * f[2]; ++z) {
    for (std::size_t y = 0; y < nd[1] * f[1]; ++y) {
      for (std::size_t x = 0; x < nd[0] * f[0]; ++x) {
        Label c = 0;
        if (x < ns[0] && y < ns[1] && z < ns[2]) {
          c = class_labels.at(x, y, z);
          if (c >= classes) {
            throw TaxonomyError("pool_labels: class id " + std::to_string(c) +
                                " exceeds class count");
          }
        }
        out[c * n_dst + (x / f[0]) + nd[0] * ((y / f[1]) + nd[1] * (z / f[2]))] += 1.0;
      }
    }
  }
  simd::kernels().div_f64(out.data(), static_cast<double>(f[0] * f[1] * f[2]), out.size());
  return ProbVolume(dst, classes, std::move(out));
}

}  // namespace forge
