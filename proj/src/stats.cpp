#include "forge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/error.hpp"

namespace forge {

namespace {

/// Average ranks of |d|, doubled so that they are integers.
std::vector<std::size_t> doubled_ranks(const std::vector<double>& mag) {
  const std::size_t n = mag.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mag[a] < mag[b]; });
  std::vector<std::size_t> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && mag[order[j + 1]] == mag[order[i]]) ++j;
    // positions i..j (1-based i+1..j+1) share rank (i+j+2)/2
    for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = i + j + 2;
    i = j + 1;
  }
  return rank2;
}

}  // namespace

PairedTestResult wilcoxon_signed_rank(const std::vector<double>& diffs, double alpha) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw PreconditionError("wilcoxon: non-finite difference");
    if (d != 0.0) nz.push_back(d);
  }
  if (nz.empty()) throw DegenerateDataError("wilcoxon: all differences are zero");
  if (nz.size() < kWilcoxonMinPairs) {
    throw PreconditionError("wilcoxon: " + std::to_string(nz.size()) +
                            " non-zero differences, need at least " +
                            std::to_string(kWilcoxonMinPairs));
  }
  const std::size_t n = nz.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(nz[i]);
  const std::vector<std::size_t> r2 = doubled_ranks(mag);

  std::size_t w2 = 0;  // doubled W+
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0) w2 += r2[i];

  PairedTestResult res;
  res.statistic = 0.5 * static_cast<double>(w2);
  res.n_pairs = n;
  res.corrected_alpha = alpha;

  if (n <= kWilcoxonExactMax) {
    // Count sign assignments by doubled positive-rank sum.
    const std::size_t total = n * (n + 1);  // sum of doubled ranks
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    std::size_t reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = reach + 1; s-- > 0;) {
        if (count[s] != 0.0) count[s + r2[i]] += count[s];
      }
      reach += r2[i];
    }
    double le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s <= total; ++s) {
      if (s <= w2) le += count[s];
      if (s >= w2) ge += count[s];
    }
    const double denom = std::ldexp(1.0, static_cast<int>(n));
    res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / denom);
    res.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie = 0.0;
    std::vector<double> sorted = mag;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie += t * t * t - t;
      i = j + 1;
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie / 48.0;
    const double dev = std::max(0.0, std::abs(res.statistic - mean) - 0.5);
    const double z = var > 0 ? dev / std::sqrt(var) : 0.0;
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  res.significant = res.p_value < res.corrected_alpha;
  return res;
}

ModelComparison bonferroni_compare(const std::map<std::string, std::vector<double>>& scores,
                                   double alpha) {
  ModelComparison out;
  if (scores.empty()) return out;
  const std::size_t n = scores.begin()->second.size();
  for (const auto& [name, s] : scores) {
    if (s.size() != n) {
      throw PairingError("model '" + name + "' has " + std::to_string(s.size()) +
                         " scores, expected " + std::to_string(n));
    }
  }
  double best = -INFINITY;
  for (const auto& [name, s] : scores) {
    const double m = n ? std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n) : 0.0;
    if (out.top.empty() || m > best) {
      best = m;
      out.top = name;
    }
  }
  const double corrected =
      scores.size() > 1 ? alpha / static_cast<double>(scores.size() - 1) : alpha;
  const std::vector<double>& top = scores.at(out.top);
  for (const auto& [name, s] : scores) {
    PairedTestResult r;
    r.corrected_alpha = corrected;
    if (name != out.top) {
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = s[i] - top[i];
      try {
        r = wilcoxon_signed_rank(d, corrected);
      } catch (const DegenerateDataError&) {
        r.n_pairs = 0;
      } catch (const PreconditionError&) {
        r.n_pairs = static_cast<std::size_t>(
            std::count_if(d.begin(), d.end(), [](double v) { return v != 0.0; }));
      }
    } else {
      r.n_pairs = n;
    }
    if (!r.significant) out.flagged.insert(name);
    out.results[name] = r;
  }
  return out;
}

}  // namespace forge
