#include "forge/contrast.hpp"

#include <cmath>

#include "forge/error.hpp"
#include "forge/rng.hpp"
#include "forge/simd.hpp"

namespace forge {

void ContrastConfig::validate() const {
  if (!(mean_min >= 0.0 && mean_max <= 1.0 && mean_min <= mean_max)) {
    throw ConfigError("contrast.mean_range must be an ordered sub-range of [0, 1]");
  }
  if (!(std_min >= kContrastStdMin && std_max <= kContrastStdMax && std_min <= std_max)) {
    throw ConfigError("contrast.std_range must be an ordered sub-range of [0.001, 0.01]");
  }
}

ContrastSample sample_contrast(std::size_t classes, std::uint64_t seed,
                               const ContrastConfig& config) {
  if (classes == 0) throw PreconditionError("sample_contrast: need at least one class");
  config.validate();
  Rng rng(seed);
  ContrastSample c;
  c.means.resize(classes);
  c.stds.resize(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    c.means[k] = rng.uniform(config.mean_min, config.mean_max);
    c.stds[k] = rng.uniform(config.std_min, config.std_max);
  }
  return c;
}

IntensityVolume render_image(const ProbVolume& pv, const ContrastSample& contrast,
                             std::uint64_t seed) {
  if (contrast.means.size() != pv.channels() || contrast.stds.size() != pv.channels()) {
    throw ShapeError("render_image: contrast has " + std::to_string(contrast.means.size()) +
                     " classes but the partial-volume map has " +
                     std::to_string(pv.channels()) + " channels");
  }
  const std::size_t n = pv.geometry().voxel_count();
  const auto& k = simd::kernels();
  std::vector<double> acc(n, 0.0);
  std::vector<float> z(n);
  for (std::size_t c = 0; c < pv.channels(); ++c) {
    const auto weights = pv.channel(c);
    bool any = false;
    for (double w : weights) {
      if (w != 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    const std::uint64_t key = derive_seed(seed, c);
    for (std::size_t v = 0; v < n; ++v) {
      z[v] = weights[v] != 0.0 ? static_cast<float>(counter_normal(key, v)) : 0.0f;
    }
    k.mixture_accumulate(acc.data(), weights.data(), z.data(), contrast.means[c],
                         contrast.stds[c], n);
  }
  std::vector<float> out(acc.begin(), acc.end());
  return IntensityVolume(pv.geometry(), std::move(out));
}

nlohmann::json to_json(const ContrastSample& c) {
  return {{"means", c.means}, {"stds", c.stds}};
}

ContrastSample contrast_from_json(const nlohmann::json& j) {
  ContrastSample c;
  c.means = j.at("means").get<std::vector<double>>();
  c.stds = j.at("stds").get<std::vector<double>>();
  return c;
}

}  // namespace forge
