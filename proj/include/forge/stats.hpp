/**
 * @file stats.hpp
 * @brief Paired Wilcoxon signed-rank test and Bonferroni-corrected model
 *        comparison against the top-scoring model.
 */
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace forge {

struct PairedTestResult {
  double statistic = 0.0;  ///< W+, the sum of ranks of positive differences
  double p_value = 1.0;
  std::size_t n_pairs = 0;  ///< non-zero differences used
  double corrected_alpha = 0.0;
  bool significant = false;  ///< p_value < corrected_alpha
  bool exact = false;        ///< exact null distribution vs normal approximation
};

/// Largest sample size tested with the exact null distribution.
inline constexpr std::size_t kWilcoxonExactMax = 25;
/// Smallest number of non-zero differences accepted.
inline constexpr std::size_t kWilcoxonMinPairs = 5;

/// Two-sided test on paired differences. Zero differences are dropped and
/// tied magnitudes share average ranks. Throws DegenerateDataError if every
/// difference is zero and PreconditionError if fewer than 5 remain.
/// corrected_alpha / significant are filled against `alpha`.
PairedTestResult wilcoxon_signed_rank(const std::vector<double>& diffs, double alpha = 0.01);

struct ModelComparison {
  std::string top;
  /// One entry per model; the top model carries p = 1 and no test.
  std::map<std::string, PairedTestResult> results;
  /// The top model plus every model not significantly different from it.
  std::set<std::string> flagged;
};

/// Tests each model against the highest-mean model (ties to the smallest
/// name) at alpha / (m - 1). Differences are other - top. A comparison that
/// cannot be tested (all-equal or too few non-zero differences) counts as not
/// significant. Throws PairingError when score lists differ in length.
ModelComparison bonferroni_compare(const std::map<std::string, std::vector<double>>& scores,
                                   double alpha = 0.01);

}  // namespace forge
