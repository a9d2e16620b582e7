#include "episim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace episim::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty data");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

std::vector<double> midranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double tie_sum(std::span<const double> x) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    sum += t * t * t - t;
    i = j + 1;
  }
  return sum;
}

double chi_square_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double normal_two_sided_p(double z) {
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

namespace {

// Ranks doubled so midranks become integers.
std::vector<std::size_t> doubled(std::span<const double> ranks) {
  std::vector<std::size_t> out;
  out.reserve(ranks.size());
  for (double r : ranks) out.push_back(static_cast<std::size_t>(std::lround(2.0 * r)));
  return out;
}

// Two-sided p from a discrete null distribution given as counts by value.
double two_sided_from_counts(std::span<const double> counts, std::size_t observed) {
  double total = 0.0, le = 0.0, ge = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    total += counts[s];
    if (s <= observed) le += counts[s];
    if (s >= observed) ge += counts[s];
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Exact two-sided p of the rank sum of a size-k subset of `pooled` (doubled ranks).
double rank_sum_exact_p(std::span<const std::size_t> pooled, std::size_t k, std::size_t observed) {
  const std::size_t max_sum = std::accumulate(pooled.begin(), pooled.end(), std::size_t{0});
  // ways[j][s]: subsets of size j with doubled rank sum s.
  std::vector<std::vector<double>> ways(k + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t r : pooled) {
    for (std::size_t j = k; j >= 1; --j) {
      for (std::size_t s = max_sum; s >= r; --s) ways[j][s] += ways[j - 1][s - r];
    }
  }
  return two_sided_from_counts(ways[k], observed);
}

double signed_rank_exact_p(std::span<const std::size_t> ranks, std::size_t observed) {
  const std::size_t max_sum = std::accumulate(ranks.begin(), ranks.end(), std::size_t{0});
  std::vector<double> ways(max_sum + 1, 0.0);
  ways[0] = 1.0;
  for (std::size_t r : ranks) {
    for (std::size_t s = max_sum; s >= r; --s) ways[s] += ways[s - r];
  }
  return two_sided_from_counts(ways, observed);
}

}  // namespace

StatResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                             std::size_t exact_max_n) {
  if (a.empty() || b.empty()) throw std::invalid_argument("rank-sum test needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += ranks[i];

  StatResult r;
  r.test = "wilcoxon_rank_sum";
  r.statistic = w - na * (na + 1.0) / 2.0;
  r.n_effective = pooled.size();
  if (a.size() <= exact_max_n && b.size() <= exact_max_n) {
    const auto d = doubled(ranks);
    r.exact = true;
    r.p_value = rank_sum_exact_p(d, a.size(), static_cast<std::size_t>(std::lround(2.0 * w)));
    return r;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_sum(pooled) / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double dev = std::max(0.0, std::abs(r.statistic - na * nb / 2.0) - 0.5);
  r.p_value = normal_two_sided_p(dev / std::sqrt(var));
  return r;
}

std::vector<double> bonferroni(std::span<const double> p, std::size_t m) {
  std::vector<double> out;
  out.reserve(p.size());
  for (double v : p) out.push_back(std::min(1.0, v * static_cast<double>(m)));
  return out;
}

StatResult wilcoxon_signed_rank(std::span<const double> differences, std::size_t exact_max_n) {
  std::vector<double> nonzero;
  for (double d : differences) {
    if (d != 0.0) nonzero.push_back(d);
  }
  StatResult r;
  r.test = "wilcoxon_signed_rank";
  r.n_effective = nonzero.size();
  if (nonzero.empty()) {
    r.exact = true;
    r.p_value = 1.0;
    return r;
  }
  std::vector<double> mags;
  for (double d : nonzero) mags.push_back(std::abs(d));
  const auto ranks = midranks(mags);
  double w_plus = 0.0, w_total = 0.0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    w_total += ranks[i];
    if (nonzero[i] > 0.0) w_plus += ranks[i];
  }
  r.statistic = std::min(w_plus, w_total - w_plus);

  const double n = static_cast<double>(nonzero.size());
  if (nonzero.size() <= exact_max_n) {
    r.exact = true;
    r.p_value = signed_rank_exact_p(doubled(ranks), static_cast<std::size_t>(std::lround(2.0 * w_plus)));
    return r;
  }
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_sum(mags) / 48.0;
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double dev = std::max(0.0, std::abs(w_plus - n * (n + 1.0) / 4.0) - 0.5);
  r.p_value = normal_two_sided_p(dev / std::sqrt(var));
  return r;
}

StatResult kruskal_wallis(std::span<const std::vector<double>> groups, double posthoc_alpha) {
  if (groups.size() < 2) throw std::invalid_argument("Kruskal-Wallis needs at least two groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("Kruskal-Wallis groups must be non-empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const auto ranks = midranks(pooled);
  const double n = static_cast<double>(pooled.size());

  double sum_sq = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rs += ranks[offset + i];
    sum_sq += rs * rs / static_cast<double>(g.size());
    offset += g.size();
  }
  StatResult r;
  r.test = "kruskal_wallis";
  r.df = static_cast<double>(groups.size() - 1);
  r.n_effective = pooled.size();
  const double correction = 1.0 - tie_sum(pooled) / (n * n * n - n);
  if (correction > 0.0) {
    const double h = 12.0 / (n * (n + 1.0)) * sum_sq - 3.0 * (n + 1.0);
    r.statistic = std::max(0.0, h / correction);
  }
  r.p_value = chi_square_sf(r.statistic, r.df);

  if (r.p_value < posthoc_alpha) {
    const std::size_t m = groups.size() * (groups.size() - 1) / 2;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const double p = wilcoxon_rank_sum(groups[i], groups[j]).p_value;
        r.post_hoc.push_back({i, j, p, std::min(1.0, p * static_cast<double>(m))});
      }
    }
  }
  return r;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

constexpr std::size_t kBootstrapChunk = 1024;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Interval bootstrap_ci(std::span<const double> samples, const Statistic& statistic,
                      std::size_t n_resamples, std::uint64_t seed, double confidence) {
  if (samples.empty()) throw std::invalid_argument("bootstrap of empty data");
  if (n_resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must be in (0, 1)");

  std::vector<double> stats(n_resamples);
  std::vector<double> resample(samples.size());
  const std::size_t chunks = (n_resamples + kBootstrapChunk - 1) / kBootstrapChunk;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(c)));
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    const std::size_t end = std::min(n_resamples, (c + 1) * kBootstrapChunk);
    for (std::size_t b = c * kBootstrapChunk; b < end; ++b) {
      for (double& v : resample) v = samples[pick(rng)];
      stats[b] = statistic(resample);
    }
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - confidence) / 2.0;
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

}  // namespace episim::stats
