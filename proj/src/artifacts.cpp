#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include "forge/contrast.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"
#include "forge/shape.hpp"
#include "forge/simd.hpp"

namespace forge {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftwf_complex*>(fftwf_malloc(sizeof(fftwf_complex) * n))), size(n) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftwf_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  std::complex<float>* begin() { return reinterpret_cast<std::complex<float>*>(data); }
  fftwf_complex* data;
  std::size_t size;
};

/// In-place 3D DFT. FFTW_ESTIMATE keeps the chosen algorithm independent of
/// timing, so repeated runs are bit-identical.
void fft3(FftwBuffer& buf, const Dims3& d, int sign) {
  fftwf_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    // FFTW takes the slowest-varying dimension first.
    plan = fftwf_plan_dft_3d(static_cast<int>(d[2]), static_cast<int>(d[1]),
                             static_cast<int>(d[0]), buf.data, buf.data, sign, FFTW_ESTIMATE);
  }
  fftwf_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftwf_destroy_plan(plan);
}

long signed_frequency(std::size_t p, std::size_t n) {
  return p < (n + 1) / 2 ? static_cast<long>(p) : static_cast<long>(p) - static_cast<long>(n);
}

/// Rotation about the grid centre, trilinear with edge clamping.
std::vector<float> rotate_clamped(const IntensityVolume& img, const Vec3& rotation_deg) {
  AffineSample a;
  a.rotation_deg = rotation_deg;
  const Geometry& g = img.geometry();
  const Eigen::Matrix3d inv = a.linear().inverse();
  const Eigen::Matrix3d lin = g.affine().topLeftCorner<3, 3>();
  const Eigen::Matrix3d idx_lin = lin.inverse() * inv * lin;
  const Eigen::Vector3d cidx((g.dims()[0] - 1) * 0.5, (g.dims()[1] - 1) * 0.5,
                             (g.dims()[2] - 1) * 0.5);
  const Dims3& d = g.dims();
  std::vector<float> out(g.voxel_count());
  auto clampi = [](long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(n) - 1));
  };
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        const Eigen::Vector3d s = idx_lin * (Eigen::Vector3d(x, y, z) - cidx) + cidx;
        long b[3];
        double f[3];
        for (int ax = 0; ax < 3; ++ax) {
          b[ax] = static_cast<long>(std::floor(s[ax]));
          f[ax] = s[ax] - static_cast<double>(b[ax]);
        }
        double acc = 0.0;
        for (int c = 0; c < 8; ++c) {
          const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
          const double w = (ox ? f[0] : 1 - f[0]) * (oy ? f[1] : 1 - f[1]) * (oz ? f[2] : 1 - f[2]);
          if (w == 0.0) continue;
          acc += w * img.at(clampi(b[0] + ox, d[0]), clampi(b[1] + oy, d[1]), clampi(b[2] + oz, d[2]));
        }
        out[g.index(x, y, z)] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void ArtifactConfig::validate() const {
  if (bias.enabled) {
    if (!(bias.coefficient_range >= 0.0)) throw ConfigError("artifacts.bias.coefficient_range must be >= 0");
    if (!(bias.control_spacing_mm > 0.0)) throw ConfigError("artifacts.bias.control_spacing_mm must be positive");
  }
  if (motion_enabled) {
    if (min_movements < 0 || min_movements > max_movements) {
      throw ConfigError("artifacts.motion.num_movements must be an ordered range of non-negative integers");
    }
    if (!(max_rotation_deg >= 0.0) || !(max_translation_mm >= 0.0)) {
      throw ConfigError("artifacts.motion magnitudes must be non-negative");
    }
  }
  if (noise_enabled &&
      !(noise_std_min >= kNoiseStdMin && noise_std_max <= kNoiseStdMax && noise_std_min <= noise_std_max)) {
    throw ConfigError("artifacts.noise.std_range [" + fmt_num(noise_std_min) + ", " +
                      fmt_num(noise_std_max) + "] must be an ordered sub-range of [0.01, 0.1]");
  }
}

ArtifactSample sample_artifacts(const ArtifactConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ArtifactSample s;
  s.bias = config.bias;
  s.motion.enabled = config.motion_enabled;
  s.motion.max_rotation_deg = config.max_rotation_deg;
  s.motion.max_translation_mm = config.max_translation_mm;
  const int movements = static_cast<int>(rng.uniform_int(config.min_movements, config.max_movements));
  s.motion.num_movements = config.motion_enabled ? movements : 0;
  const double noise = rng.uniform(config.noise_std_min, config.noise_std_max);
  s.noise_enabled = config.noise_enabled;
  s.noise_std = config.noise_enabled ? noise : 0.0;
  return s;
}

IntensityVolume bias_field(const Geometry& grid, const BiasSettings& bias, std::uint64_t seed) {
  const std::size_t n = grid.voxel_count();
  if (!bias.enabled || bias.coefficient_range == 0.0) {
    return IntensityVolume(grid, 1.0f);
  }
  const Dims3 cd = control_grid_dims(grid, bias.control_spacing_mm);
  Rng rng(seed);
  std::vector<double> coeff(cd[0] * cd[1] * cd[2]);
  for (auto& c : coeff) c = rng.uniform(-bias.coefficient_range, bias.coefficient_range);

  // Scalar trilinear expansion of the coarse log-field.
  std::array<std::vector<std::size_t>, 3> j0;
  std::array<std::vector<double>, 3> fr;
  for (int a = 0; a < 3; ++a) {
    const double step = bias.control_spacing_mm / grid.voxel_size()[a];
    j0[a].resize(grid.dims()[a]);
    fr[a].resize(grid.dims()[a]);
    for (std::size_t i = 0; i < grid.dims()[a]; ++i) {
      const double u = static_cast<double>(i) / step;
      const std::size_t j = std::min(static_cast<std::size_t>(std::floor(u)), cd[a] - 2);
      j0[a][i] = j;
      fr[a][i] = u - static_cast<double>(j);
    }
  }
  std::vector<double> log_field(n);
  const Dims3& d = grid.dims();
  double mean = 0.0;
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        double v = 0.0;
        for (int c = 0; c < 8; ++c) {
          const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
          const double w = (ox ? fr[0][x] : 1 - fr[0][x]) * (oy ? fr[1][y] : 1 - fr[1][y]) *
                           (oz ? fr[2][z] : 1 - fr[2][z]);
          v += w * coeff[(j0[0][x] + ox) + cd[0] * ((j0[1][y] + oy) + cd[1] * (j0[2][z] + oz))];
        }
        log_field[grid.index(x, y, z)] = v;
        mean += v;
      }
    }
  }
  mean /= static_cast<double>(n);
  std::vector<float> field(n);
  for (std::size_t v = 0; v < n; ++v) field[v] = static_cast<float>(std::exp(log_field[v] - mean));
  return IntensityVolume(grid, std::move(field));
}

IntensityVolume apply_bias_field(const IntensityVolume& img, const ArtifactSample& sample,
                                 std::uint64_t seed) {
  if (!sample.bias.enabled || sample.bias.coefficient_range == 0.0) return img;
  const IntensityVolume field = bias_field(img.geometry(), sample.bias, seed);
  std::vector<float> out(img.values().begin(), img.values().end());
  simd::kernels().mul_f32(out.data(), field.values().data(), out.size());
  return IntensityVolume(img.geometry(), std::move(out));
}

IntensityVolume apply_motion(const IntensityVolume& img, const ArtifactSample& sample,
                             std::uint64_t seed) {
  const int moves = sample.motion.num_movements;
  if (!sample.motion.enabled || moves <= 0) return img;
  const Geometry& g = img.geometry();
  const Dims3& d = g.dims();
  const std::size_t n = g.voxel_count();
  Rng rng(seed);
  const int axis = static_cast<int>(rng.uniform_int(0, 2));
  const std::size_t len = d[axis];
  const int bands = static_cast<int>(std::min<std::size_t>(moves + 1, len));

  // Band edges in centred frequency coordinates q = f + len/2.
  std::vector<long> cuts;
  {
    std::vector<long> candidates;
    for (long q = 1; q < static_cast<long>(len); ++q) candidates.push_back(q);
    for (int b = 0; b + 1 < bands; ++b) {
      const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1);
      cuts.push_back(candidates[pick]);
      candidates.erase(candidates.begin() + pick);
    }
    std::sort(cuts.begin(), cuts.end());
  }
  struct Movement {
    Vec3 rotation_deg;
    Vec3 translation_mm;
  };
  std::vector<Movement> movements(bands - 1);
  for (auto& m : movements) {
    for (auto& r : m.rotation_deg) r = rng.uniform(-sample.motion.max_rotation_deg, sample.motion.max_rotation_deg);
    for (auto& t : m.translation_mm) t = rng.uniform(-sample.motion.max_translation_mm, sample.motion.max_translation_mm);
  }

  auto band_of = [&](long q) {
    return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), q) - cuts.begin());
  };
  const int dc_band = band_of(static_cast<long>(len / 2));
  // Copy index per band: DC band -> 0 (unmoved), others -> 1..bands-1 in order.
  std::vector<int> copy_of_band(bands);
  for (int b = 0, next = 1; b < bands; ++b) copy_of_band[b] = b == dc_band ? 0 : next++;

  FftwBuffer result(n);
  FftwBuffer work(n);
  for (int copy = 0; copy < bands; ++copy) {
    std::vector<float> moved;
    const float* src = img.values().data();
    if (copy > 0) {
      moved = rotate_clamped(img, movements[copy - 1].rotation_deg);
      src = moved.data();
    }
    auto* w = work.begin();
    for (std::size_t v = 0; v < n; ++v) w[v] = {src[v], 0.0f};
    fft3(work, d, FFTW_FORWARD);
    auto* r = result.begin();
    for (std::size_t z = 0; z < d[2]; ++z) {
      for (std::size_t y = 0; y < d[1]; ++y) {
        for (std::size_t x = 0; x < d[0]; ++x) {
          const std::size_t p[3] = {x, y, z};
          const long q = signed_frequency(p[axis], len) + static_cast<long>(len / 2);
          if (copy_of_band[band_of(q)] != copy) continue;
          const std::size_t v = g.index(x, y, z);
          std::complex<double> value(w[v].real(), w[v].imag());
          if (copy > 0) {
            // Shift by t mm: multiply by exp(-2 pi i f t / (n dx)).
            double phase = 0.0;
            for (int a = 0; a < 3; ++a) {
              const double f = static_cast<double>(signed_frequency(p[a], d[a]));
              phase += f * movements[copy - 1].translation_mm[a] /
                       (static_cast<double>(d[a]) * g.voxel_size()[a]);
            }
            value *= std::polar(1.0, -2.0 * std::numbers::pi * phase);
          }
          r[v] = {static_cast<float>(value.real()), static_cast<float>(value.imag())};
        }
      }
    }
  }
  fft3(result, d, FFTW_BACKWARD);
  std::vector<float> out(n);
  const auto* r = result.begin();
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t v = 0; v < n; ++v) out[v] = static_cast<float>(std::abs(r[v]) * scale);
  return IntensityVolume(g, std::move(out));
}

IntensityVolume add_gaussian_noise(const IntensityVolume& img, double stddev, std::uint64_t seed) {
  if (!(stddev >= kNoiseStdMin && stddev <= kNoiseStdMax)) {
    throw PreconditionError("noise standard deviation " + std::to_string(stddev) +
                            " outside [0.01, 0.1]");
  }
  std::vector<float> out(img.values().begin(), img.values().end());
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = static_cast<float>(out[v] + stddev * counter_normal(seed, v));
  }
  return IntensityVolume(img.geometry(), std::move(out));
}

IntensityVolume normalize_min_max(const IntensityVolume& img) {
  std::vector<float> out(img.values().begin(), img.values().end());
  if (out.empty()) return img;
  const auto& k = simd::kernels();
  const simd::MinMax mm = k.minmax_f32(out.data(), out.size());
  if (!(mm.max > mm.min)) {
    std::fill(out.begin(), out.end(), 0.0f);
  } else {
    k.normalize_f32(out.data(), mm.min, mm.max - mm.min, out.size());
  }
  return IntensityVolume(img.geometry(), std::move(out));
}

IntensityVolume apply_noise_and_normalize(const IntensityVolume& img, double noise_std,
                                          std::uint64_t seed) {
  return normalize_min_max(add_gaussian_noise(img, noise_std, seed));
}

nlohmann::json to_json(const ArtifactSample& a) {
  return {{"bias",
           {{"enabled", a.bias.enabled},
            {"coefficient_range", a.bias.coefficient_range},
            {"control_spacing_mm", a.bias.control_spacing_mm}}},
          {"motion",
           {{"enabled", a.motion.enabled},
            {"num_movements", a.motion.num_movements},
            {"max_rotation_deg", a.motion.max_rotation_deg},
            {"max_translation_mm", a.motion.max_translation_mm}}},
          {"noise_enabled", a.noise_enabled},
          {"noise_std", a.noise_std}};
}

ArtifactSample artifacts_from_json(const nlohmann::json& j) {
  ArtifactSample a;
  const auto& b = j.at("bias");
  a.bias.enabled = b.at("enabled").get<bool>();
  a.bias.coefficient_range = b.at("coefficient_range").get<double>();
  a.bias.control_spacing_mm = b.at("control_spacing_mm").get<double>();
  const auto& m = j.at("motion");
  a.motion.enabled = m.at("enabled").get<bool>();
  a.motion.num_movements = m.at("num_movements").get<int>();
  a.motion.max_rotation_deg = m.at("max_rotation_deg").get<double>();
  a.motion.max_translation_mm = m.at("max_translation_mm").get<double>();
  a.noise_enabled = j.at("noise_enabled").get<bool>();
  a.noise_std = j.at("noise_std").get<double>();
  return a;
}

}  // namespace forge
