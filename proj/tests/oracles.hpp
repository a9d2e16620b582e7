#pragma once

// Reference computations the tests compare against. Nothing here calls into
// the library under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace oracle {

// Force table for the 71 kg patient, typed in independently of the library.
struct Row {
  const char* tissue;
  const char* stage;
  double a0, a1, a2, a3;
  double start, end;  // mm
};

inline constexpr std::array<Row, 9> kTable{{
    {"skin", "BP", 0.0075, 0.0037, -0.0015, 0.0008, 0.0, 13.92},
    {"fat", "AP", 1.9212, 0.1437, -0.1682, 0.0, 13.92, 17.15},
    {"supraspinous", "BP", 0.628, 0.2637, 0.0343, 0.0, 17.15, 19.37},
    {"supraspinous", "AP", 1.3855, -0.7174, 0.0923, 0.0, 19.37, 20.0},
    {"interspinous", "BP", 1.4021, 0.3054, 0.0, 0.0, 20.0, 23.18},
    {"interspinous", "AP", 2.3761, 0.0, 0.0, 0.0, 23.18, 41.18},
    {"ligamentum_flavum", "BP", 2.3761, 0.4783, -0.0186, 0.0, 41.18, 44.79},
    {"ligamentum_flavum", "AP", 3.861, -0.0539, -0.0375, 0.0, 44.79, 48.38},
    {"epidural_space", "None", 0.0, 0.0, 0.0, 0.0, 48.38, 56.98},
}};

// Expanded power form, not Horner.
inline double poly(const Row& r, double u) {
  return r.a0 + r.a1 * u + r.a2 * std::pow(u, 2) + r.a3 * std::pow(u, 3);
}

// Mass-scaled thickness ratio from the waist model: A = area * m/71,
// T = sqrt(A/pi), ratio = (T/r0)^3.
inline double thickness_ratio(double mass) {
  const double area = 574.94 * (mass / 71.0);
  const double radius = std::sqrt(area / std::numbers::pi);
  return std::pow(radius / 13.53, 3);
}

// Force at the end of a region's band, at the given mass.
inline double end_force(const Row& r, double mass) {
  const double k = thickness_ratio(mass);
  const double width = (r.end - r.start) * k;
  return poly(r, width / k);
}

// Two-sided p of a rank-sum statistic by enumerating every way to pick the
// first group's ranks out of the pooled midranks.
inline double rank_sum_p_enumerated(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j] < pooled[i]) ++less;
      if (pooled[j] == pooled[i]) ++equal;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double observed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) observed += rank[i];
  double total = 0, le = 0, ge = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += rank[i];
    }
    ++total;
    if (s <= observed + 1e-9) ++le;
    if (s >= observed - 1e-9) ++ge;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Two-sided p of the signed-rank statistic by enumerating all sign patterns.
inline double signed_rank_p_enumerated(const std::vector<double>& d) {
  std::vector<double> nz;
  for (double x : d) {
    if (x != 0.0) nz.push_back(x);
  }
  const std::size_t n = nz.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(nz[j]) < std::abs(nz[i])) ++less;
      if (std::abs(nz[j]) == std::abs(nz[i])) ++equal;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nz[i] > 0) observed += rank[i];
  }
  double total = 0, le = 0, ge = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += rank[i];
    }
    ++total;
    if (s <= observed + 1e-9) ++le;
    if (s >= observed - 1e-9) ++ge;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Kruskal-Wallis H without ties, straight from the textbook formula.
inline double kruskal_h_no_ties(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  double sum = 0;
  for (const auto& g : groups) {
    double r = 0;
    for (double x : g) {
      r += 1.0 + static_cast<double>(std::count_if(all.begin(), all.end(), [&](double y) { return y < x; }));
    }
    sum += r * r / static_cast<double>(g.size());
  }
  return 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
}

}  // namespace oracle
