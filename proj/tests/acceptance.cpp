// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "forge/config.hpp"
#include "forge/contrast.hpp"
#include "forge/error.hpp"
#include "forge/eval.hpp"
#include "forge/generate.hpp"
#include "forge/phantom.hpp"
#include "forge/resample.hpp"
#include "forge/shape.hpp"
#include "forge/stats.hpp"
#include "test_util.hpp"

using namespace forge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %s (%.2f s)%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.str().c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double count_volume(const LabelVolume& v, Label k) {
  return double(std::count(v.values().begin(), v.values().end(), k)) * v.geometry().voxel_volume();
}

// --- morphology reference --------------------------------------------------

bool in_element(StructuringElement se, int dx, int dy, int dz) {
  const int order = std::abs(dx) + std::abs(dy) + std::abs(dz);
  if (order == 0) return false;
  if (se == StructuringElement::face6) return order == 1;
  if (se == StructuringElement::edge18) return order <= 2;
  return true;
}

LabelVolume brute_morph(const LabelVolume& in, const MorphRule& rule, int iterations, StructuringElement se) {
  const Geometry& g = in.geometry();
  const long n = long(g.dims()[0]);
  std::vector<Label> cur(in.values().begin(), in.values().end());
  auto permitted = [&](Label c) {
    return c != rule.source && std::count(rule.neighbors.begin(), rule.neighbors.end(), c) > 0;
  };
  for (int it = 0; it < iterations; ++it) {
    std::vector<Label> next = cur;
    for (long z = 0; z < n; ++z)
      for (long y = 0; y < n; ++y)
        for (long x = 0; x < n; ++x) {
          std::map<Label, int> votes;
          bool near_source = false;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const long X = x + dx, Y = y + dy, Z = z + dz;
                if (!in_element(se, dx, dy, dz) || X < 0 || Y < 0 || Z < 0 || X >= n || Y >= n || Z >= n) continue;
                const Label c = cur[g.index(X, Y, Z)];
                near_source |= c == rule.source;
                if (permitted(c)) ++votes[c];
              }
          const Label c = cur[g.index(x, y, z)];
          if (rule.mode == MorphMode::dilate && permitted(c) && near_source) {
            next[g.index(x, y, z)] = rule.source;
          } else if (rule.mode == MorphMode::erode && c == rule.source && !votes.empty()) {
            Label best = votes.begin()->first;
            for (auto [k, v] : votes)
              if (v > votes[best]) best = k;
            next[g.index(x, y, z)] = best;
          }
        }
    cur.swap(next);
  }
  return LabelVolume(g, std::move(cur));
}

// --- Wilcoxon reference ----------------------------------------------------

double enumerated_p(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0) d.push_back(x);
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (double y : d) {
      less += std::abs(y) < std::abs(d[i]);
      equal += std::abs(y) == std::abs(d[i]);
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double w = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) w += rank[i];
  std::uint64_t le = 0, ge = 0;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank[i];
    le += s <= w + 1e-9;
    ge += s >= w - 1e-9;
  }
  const double total = std::ldexp(1.0, int(n));
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Survival function of chi-square with 3 degrees of freedom.
double chi2_sf_df3(double x) {
  return std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / std::numbers::pi) * std::exp(-x / 2);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FORGE_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = test::read_bytes(e.path());
  return out;
}

}  // namespace

int main() {
  criterion("1 partial-volume mass conservation under factor-3 pooling", [](Outcome& o) {
    const auto t0 = Clock::now();
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
      const LabelVolume v = test::random_labels(test::cube_grid(24, 0.25), 6, 100 + i);
      const ProbVolume pooled = pool_partial_volume(one_hot_classes(v, 6), {});
      const double cell = pooled.geometry().voxel_volume();
      for (Label k = 0; k < 6; ++k) {
        double after = 0;
        for (double p : pooled.channel(k)) after += p * cell;
        const double before = count_volume(v, k);
        worst = std::max(worst, std::abs(after - before) / before);
      }
    }
    const double secs = seconds_since(t0);
    o.detail << " max rel diff " << worst << ", " << secs << " s";
    o.require(worst <= 1e-9, "relative difference <= 1e-9");
    o.require(secs < 5.0, "runtime < 5 s");
  });

  criterion("2 super-resolution fidelity on a 10 mm sphere", [](Outcome& o) {
    const auto t0 = Clock::now();
    const double r = 10.0;
    const Geometry g = Geometry::axis_aligned({48, 48, 48}, {0.5, 0.5, 0.5}, {-11.75, -11.75, -11.75});
    const LabelVolume sphere = test::labels_from(g, [&](auto x, auto y, auto z) {
      return Label(g.to_world(Eigen::Vector3d(x, y, z)).norm() <= r ? 1 : 0);
    });
    const LabelTaxonomy tax = test::simple_taxonomy(2);
    ResampleSpec sinc;
    ResampleSpec nearest;
    nearest.interpolation = Interpolation::nearest;
    nearest.smoothing_sigma_mm = 0.0;
    const LabelVolume up = superresolve_labels(sphere, tax, sinc);
    const LabelVolume nn = superresolve_labels(sphere, tax, nearest);

    const double v0 = count_volume(sphere, 1), v1 = count_volume(up, 1);
    const double rel = std::abs(v1 - v0) / v0;
    o.detail << " volume rel diff " << rel;
    o.require(rel <= 0.02, "volume within 2%");

    // Stair-step at the source pitch: fraction of boundary 2x2x2 blocks
    // (aligned to source voxels) that are not uniform. Nearest neighbour
    // replicates source voxels, so the fraction is zero.
    auto split_fraction = [](const LabelVolume& v) {
      const Dims3& d = v.geometry().dims();
      std::size_t boundary = 0, split = 0;
      for (std::size_t z = 0; z + 1 < d[2]; z += 2)
        for (std::size_t y = 0; y + 1 < d[1]; y += 2)
          for (std::size_t x = 0; x + 1 < d[0]; x += 2) {
            int ones = 0;
            for (int k = 0; k < 8; ++k) ones += v.at(x + (k & 1), y + (k >> 1 & 1), z + (k >> 2)) == 1;
            // A block counts as boundary when it or a face neighbour block differs.
            bool edge = ones != 0 && ones != 8;
            if (!edge && x >= 2 && x + 3 < d[0]) edge = v.at(x - 1, y, z) != v.at(x, y, z) || v.at(x + 2, y, z) != v.at(x, y, z);
            if (!edge && y >= 2 && y + 3 < d[1]) edge = v.at(x, y - 1, z) != v.at(x, y, z) || v.at(x, y + 2, z) != v.at(x, y, z);
            if (!edge && z >= 2 && z + 3 < d[2]) edge = v.at(x, y, z - 1) != v.at(x, y, z) || v.at(x, y, z + 2) != v.at(x, y, z);
            boundary += edge;
            split += ones != 0 && ones != 8;
          }
      return double(split) / double(boundary);
    };
    // Radial deviation of boundary voxel faces from the analytic sphere.
    auto radial_rms = [&](const LabelVolume& v) {
      const Geometry& ug = v.geometry();
      const Dims3& d = ug.dims();
      double ss = 0;
      std::size_t n = 0;
      for (std::size_t z = 0; z < d[2]; ++z)
        for (std::size_t y = 0; y < d[1]; ++y)
          for (std::size_t x = 0; x + 1 < d[0]; ++x)
            if (v.at(x, y, z) != v.at(x + 1, y, z)) {
              const double dev = ug.to_world(Eigen::Vector3d(x + 0.5, y, z)).norm() - r;
              ss += dev * dev;
              ++n;
            }
      return std::sqrt(ss / double(n));
    };
    const double f_nn = split_fraction(nn), f_up = split_fraction(up);
    const double rms_nn = radial_rms(nn), rms_up = radial_rms(up);
    const double secs = seconds_since(t0);
    o.detail << ", split boundary blocks nn " << f_nn << " superres " << f_up << ", radial rms nn " << rms_nn
             << " mm superres " << rms_up << " mm, " << secs << " s";
    o.require(f_nn == 0.0, "nearest neighbour keeps the source pitch");
    o.require(f_up >= 0.25, "superres splits >= 25% of boundary blocks");
    o.require(rms_up < rms_nn, "superres boundary closer to the sphere than nearest neighbour");
    o.require(secs < 60.0, "runtime < 60 s");
  });

  criterion("3 constrained morphology matches the brute-force reference", [](Outcome& o) {
    std::mt19937_64 rng(8);
    int cases = 0, mismatches = 0;
    for (int i = 0; i < 50; ++i) {
      const Label k = Label(3 + i % 4);
      const LabelVolume v = test::random_labels(test::cube_grid(16, 0.25), k, 1000 + i);
      const Label src = Label(rng() % k);
      std::vector<Label> nb;
      for (Label c = 0; c < k; ++c)
        if (c != src && rng() % 2) nb.push_back(c);
      if (nb.empty()) nb.push_back(Label((src + 1) % k));
      const MorphMode mode = i % 2 ? MorphMode::erode : MorphMode::dilate;
      const auto se = StructuringElement(i % 3);
      const int iters = 1 + int(rng() % 4);
      const MorphRule rule{src, mode, nb};
      const LabelTaxonomy tax = test::simple_taxonomy(k, {rule});
      ++cases;
      mismatches += !(constrained_morph(v, {0, iters, se}, tax) == brute_morph(v, rule, iters, se));
    }
    const LabelTaxonomy tax = test::simple_taxonomy(3, {{1, MorphMode::dilate, {2}}});
    const LabelVolume half = test::labels_from(test::cube_grid(16, 0.25), [](auto x, auto, auto) {
      return Label(x < 7 ? 1 : 2);
    });
    const LabelVolume grown = constrained_morph(half, {0, 1, StructuringElement::face6}, tax);
    const LabelVolume shifted = test::labels_from(test::cube_grid(16, 0.25), [](auto x, auto, auto) {
      return Label(x < 8 ? 1 : 2);
    });
    o.detail << " " << cases << " volumes, " << mismatches << " mismatches";
    o.require(mismatches == 0, "exact agreement");
    o.require(grown == shifted, "half-space boundary moves by one 0.25 mm voxel");
  });

  criterion("4 renderer mean on a 50/50 two-class field", [](Outcome& o) {
    const Geometry g = test::cube_grid(32, 0.75);
    const std::size_t n = g.voxel_count();
    ProbVolume pv(g, 2, std::vector<double>(2 * n, 0.5));
    ContrastSample c;
    c.means = {0.2, 0.8};
    c.stds = {0.01, 0.01};
    const IntensityVolume img = render_image(pv, c, 17);
    double sum = 0;
    for (float v : img.values()) sum += v;
    const double mean = sum / double(n);
    o.detail << " " << n << " voxels, mean " << mean;
    o.require(n >= 10000, ">= 1e4 voxels");
    o.require(std::abs(mean - 0.5) <= 0.005, "mean within 0.5 +- 0.005");
  });

  criterion("5 sampled parameter ranges", [](Outcome& o) {
    std::size_t draws = 0;
    bool ok = true;
    for (std::uint64_t s = 0; draws < 100000; ++s) {
      const ContrastSample c = sample_contrast(24, s);
      for (std::size_t k = 0; k < 24; ++k, ++draws)
        ok = ok && c.means[k] >= 0.0 && c.means[k] <= 1.0 && c.stds[k] >= 0.001 && c.stds[k] <= 0.01;
    }
    o.require(ok, "contrast mean in [0,1], std in [0.001, 0.01]");
    double nmin = 1, nmax = 0;
    for (std::uint64_t s = 0; s < 100000; ++s) {
      const double sd = sample_artifacts(ArtifactConfig{}, s).noise_std;
      nmin = std::min(nmin, sd);
      nmax = std::max(nmax, sd);
    }
    o.require(nmin >= 0.01 && nmax <= 0.1, "noise std in [0.01, 0.1]");

    const LabelTaxonomy tax = LabelTaxonomy::whole_head();
    ShapeConfig cfg;
    cfg.morph_probability = 1.0;
    cfg.affine_enabled = false;
    cfg.elastic_enabled = false;
    std::array<double, 5> hist{};
    double total = 0;
    bool in_range = true;
    for (std::uint64_t s = 0; total < 100000; ++s)
      for (const auto& m : sample_shape_recipe(tax, cfg, s, test::cube_grid(8, 0.25)).morph_samples) {
        in_range = in_range && m.iterations >= 1 && m.iterations <= 4;
        if (in_range) ++hist[m.iterations];
        ++total;
      }
    double chi2 = 0;
    for (int k = 1; k <= 4; ++k) chi2 += std::pow(hist[k] - total / 4, 2) / (total / 4);
    const double p = chi2_sf_df3(chi2);
    o.detail << " " << draws << " contrast draws, noise std [" << nmin << ", " << nmax << "], " << total
             << " iteration draws, chi2 " << chi2 << " p " << p;
    o.require(in_range, "iterations in 1..4");
    o.require(p > 0.01, "iteration uniformity chi2 p > 0.01");
  });

  criterion("6 Dice against brute-force triple counting", [](Outcome& o) {
    int mismatches = 0;
    bool identity = true, symmetric = true;
    for (int i = 0; i < 100; ++i) {
      const Label k = Label(2 + i % 5);
      const LabelVolume a = test::random_labels(test::cube_grid(8), k, 2 * i);
      const LabelVolume b = test::random_labels(test::cube_grid(8), k, 2 * i + 1);
      std::set<Label> classes;
      for (Label c = 0; c < k; ++c) classes.insert(c);
      const DiceReport r = dice(a, b, classes);
      for (Label c = 0; c < k; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t v = 0; v < a.size(); ++v) {
          tp += a[v] == c && b[v] == c;
          fp += a[v] == c && b[v] != c;
          fn += a[v] != c && b[v] == c;
        }
        const auto got = r.per_class.at(c);
        if (tp + fp + fn == 0) {
          mismatches += got.has_value();
        } else {
          mismatches += !got || *got != 2 * tp / (2 * tp + fp + fn);
        }
      }
      const DiceReport self = dice(a, a, classes);
      for (const auto& [c, d] : self.per_class) identity = identity && (!d || *d == 1.0);
      const DiceReport rev = dice(b, a, classes);
      symmetric = symmetric && rev.per_class == r.per_class;
    }
    o.detail << " 100 pairs, " << mismatches << " mismatches";
    o.require(mismatches == 0, "exact agreement");
    o.require(identity, "dice(A, A) = 1");
    o.require(symmetric, "dice(A, B) = dice(B, A)");
  });

  criterion("7 relative atrophy error examples", [](Outcome& o) {
    const double match = relative_atrophy_error({200, 180, 100, 90});
    const double under = relative_atrophy_error({100, 95, 100, 90});
    const double over = relative_atrophy_error({100, 80, 100, 90});
    o.detail << " matching " << match << ", 5% vs 10% " << under << ", 20% vs 10% " << over;
    o.require(std::abs(match) < 1e-12, "matching ratios give 0");
    o.require(std::abs(under - 0.5) < 1e-12, "underestimation gives +0.5");
    o.require(std::abs(over + 1.0) < 1e-12, "overestimation gives -1.0");
  });

  criterion("8 Wilcoxon exactness and Bonferroni protocol", [](Outcome& o) {
    std::mt19937 rng(5);
    double worst = 0;
    int tested = 0;
    for (std::size_t n = 1; n <= 12; ++n)
      for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> d(n);
        std::uniform_int_distribution<int> mag(1, rep % 2 ? 3 : 100), sign(0, 1);
        for (auto& x : d) x = (sign(rng) ? 1.0 : -1.0) * mag(rng);
        if (n < std::size_t(kWilcoxonMinPairs)) {
          bool threw = false;
          try {
            wilcoxon_signed_rank(d);
          } catch (const PreconditionError&) {
            threw = true;
          }
          o.require(threw, "n < 5 is rejected");
          continue;
        }
        worst = std::max(worst, std::abs(wilcoxon_signed_rank(d).p_value - enumerated_p(d)));
        ++tested;
      }
    o.require(worst <= 1e-12, "p-values within 1e-12 of enumeration");

    // Synthetic score table: "best" leads everywhere, "close" is a coin flip
    // away from it, "weak" trails everywhere.
    std::map<std::string, std::vector<double>> scores;
    std::vector<double> best(12), close(12), weak(12);
    for (int s = 0; s < 12; ++s) {
      best[s] = 0.80 + 0.01 * s;
      close[s] = best[s] + (s % 2 ? 0.002 : -0.003) * (1 + s % 5);
      weak[s] = best[s] - 0.05 - 0.001 * s;
    }
    scores["best"] = best;
    scores["close"] = close;
    scores["weak"] = weak;
    const ModelComparison cmp = bonferroni_compare(scores, 0.01);
    // Expected from the enumerated p-values and alpha / (m - 1).
    std::vector<double> dc(12), dw(12);
    for (int s = 0; s < 12; ++s) {
      dc[s] = close[s] - best[s];
      dw[s] = weak[s] - best[s];
    }
    const double alpha_c = 0.01 / 2;
    std::set<std::string> expect_flag{"best"};
    if (!(enumerated_p(dc) < alpha_c)) expect_flag.insert("close");
    if (!(enumerated_p(dw) < alpha_c)) expect_flag.insert("weak");
    o.require(cmp.top == "best", "top model");
    o.require(cmp.results.at("close").corrected_alpha == alpha_c, "corrected alpha = alpha / (m - 1)");
    o.require(std::set<std::string>(cmp.flagged.begin(), cmp.flagged.end()) == expect_flag, "flagged set");
    o.require(expect_flag == std::set<std::string>{"best", "close"}, "table exercises both outcomes");
    o.detail << " " << tested << " samples, max |diff| " << worst << ", flagged";
    for (const auto& f : cmp.flagged) o.detail << " " << f;
  });

  criterion("9 generate --crop 64: workers 1 vs 4 byte-identical, one sample < 30 s", [](Outcome& o) {
    const auto dir = test::scratch_dir("acceptance_generate");
    const std::string cfg = std::string(FORGE_CONFIG_DIR) + "/default.json";
    const std::string common = "generate --quiet --config " + cfg + " --crop 64 --num-samples 8 --out ";
    auto t0 = Clock::now();
    o.require(run_cli(common + (dir / "w1").string() + " --workers 1") == 0, "workers 1 run succeeds");
    const double t_w1 = seconds_since(t0);
    t0 = Clock::now();
    o.require(run_cli(common + (dir / "w4").string() + " --workers 4") == 0, "workers 4 run succeeds");
    const double t_w4 = seconds_since(t0);
    const auto a = snapshot(dir / "w1"), b = snapshot(dir / "w4");
    o.require(a.size() == 8 * 4 + 1, "8 samples written");
    o.require(a == b, "byte-identical datasets");

    // Single-sample wall time from template file to finished sample.
    const LabelTaxonomy tax = LabelTaxonomy::whole_head();
    GeneratorConfig gc;
    gc.crop = 64;
    t0 = Clock::now();
    const PreparedTemplate t = prepare_template(make_head_phantom({96, 96, 96}, {0.5, 0.5, 0.5}, 0), tax, gc, "p0");
    const double t_prep = seconds_since(t0);
    t0 = Clock::now();
    const GeneratedSample s = generate_sample(t, tax, gc, 42);
    const double t_sample = seconds_since(t0);
    o.require(s.image.geometry().dims() == Dims3{64, 64, 64}, "64^3 crop");
    o.require(t_prep + t_sample < 30.0, "one sample including template preparation < 30 s");
    o.detail << " 8 samples: workers 1 " << t_w1 << " s, workers 4 " << t_w4 << " s; one sample " << t_sample
             << " s + template " << t_prep << " s";
  });

  criterion("10 hard labels equal argmax of the rendered PV maps", [](Outcome& o) {
    const LabelTaxonomy tax = LabelTaxonomy::whole_head();
    GeneratorConfig gc;
    gc.crop = 24;
    const PreparedTemplate t = prepare_template(make_head_phantom({64, 64, 64}, {0.5, 0.5, 0.5}, 3), tax, gc, "p3");
    int bad = 0;
    std::set<Label> seen;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const GeneratedSample g = generate_sample(t, tax, gc, derive_seed(77, s));
      bad += !(g.labels == argmax_labels(g.pv));
      seen.insert(g.labels.values().begin(), g.labels.values().end());
    }
    o.detail << " 20 crops, " << bad << " mismatches, " << seen.size() << " classes seen";
    o.require(bad == 0, "labels == argmax(pv)");
    o.require(seen.size() > 5, "crops are non-trivial");
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
