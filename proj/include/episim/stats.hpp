#pragma once

// Nonparametric statistics: rank tests with exact small-sample p-values,
// Bonferroni adjustment, and percentile bootstrap confidence intervals.
// All tests are two-sided; ties get midranks with the usual variance
// correction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace episim::stats {

struct PairwiseComparison {
  std::size_t group_a = 0;
  std::size_t group_b = 0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
};

struct StatResult {
  std::string test;
  double statistic = 0.0;
  double df = 0.0;  // 0 when the test has no degrees of freedom
  double p_value = 1.0;
  bool exact = false;
  std::size_t n_effective = 0;
  std::vector<PairwiseComparison> post_hoc;
};

double mean(std::span<const double> x);

// 1-based midranks of x in its original order.
std::vector<double> midranks(std::span<const double> x);

// Sum over tie groups of (t^3 - t).
double tie_sum(std::span<const double> x);

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);
// Two-sided normal p-value for a z score.
double normal_two_sided_p(double z);

// H with tie correction; p from chi-square with k-1 df. When p < alpha, all
// pairs are compared with the rank-sum test and Bonferroni-adjusted over
// k(k-1)/2 comparisons. Throws std::invalid_argument for fewer than two
// groups or an empty group.
StatResult kruskal_wallis(std::span<const std::vector<double>> groups, double posthoc_alpha = 0.05);

// Statistic is U for `a`. Exact (full null distribution) when both sizes are
// <= exact_max_n, normal approximation with continuity correction otherwise.
StatResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                             std::size_t exact_max_n = 10);

// min(1, p * m) elementwise.
std::vector<double> bonferroni(std::span<const double> p, std::size_t m);

// Zero differences are dropped. Statistic is min(W+, W-). Exact when the
// remaining count is <= exact_max_n.
StatResult wilcoxon_signed_rank(std::span<const double> differences, std::size_t exact_max_n = 12);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

using Statistic = std::function<double(std::span<const double>)>;

// Linear-interpolation quantile (R type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

// Percentile bootstrap. Resamples are drawn in fixed-size chunks, each from
// its own generator seeded from (seed, chunk index), so the result does not
// depend on how chunks are scheduled. Throws std::invalid_argument on empty
// input.
Interval bootstrap_ci(std::span<const double> samples, const Statistic& statistic = mean,
                      std::size_t n_resamples = 10000, std::uint64_t seed = 0,
                      double confidence = 0.95);

}  // namespace episim::stats
