// Compiled with -mavx2 (and without -mfma): see kernels.hpp for the
// bit-equivalence contract with the scalar reference.
#include "episim/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cassert>

namespace episim::kernels::avx2 {

namespace {
constexpr std::size_t kLanes = 4;
}

void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out) {
  assert(out.size() == depth.size() && terms.start.size() == depth.size());
  const std::size_t n = depth.size();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d u = _mm256_sub_pd(_mm256_loadu_pd(depth.data() + i),
                              _mm256_loadu_pd(terms.start.data() + i));
    // max_pd(a, b) is (a > b ? a : b), so NaN and -0.0 pass through as in the scalar branch.
    u = _mm256_max_pd(zero, u);
    u = _mm256_div_pd(u, vscale);
    __m256d f = _mm256_mul_pd(u, _mm256_loadu_pd(terms.a3.data() + i));
    f = _mm256_add_pd(_mm256_loadu_pd(terms.a2.data() + i), f);
    f = _mm256_mul_pd(u, f);
    f = _mm256_add_pd(_mm256_loadu_pd(terms.a1.data() + i), f);
    f = _mm256_mul_pd(u, f);
    f = _mm256_add_pd(_mm256_loadu_pd(terms.a0.data() + i), f);
    _mm256_storeu_pd(out.data() + i, _mm256_max_pd(zero, f));
  }
  for (; i < n; ++i) {
    out[i] = kernels::eval_cubic(depth[i], terms.start[i], terms.a0[i], terms.a1[i], terms.a2[i],
                                 terms.a3[i], scale);
  }
}

void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out) {
  assert(out.size() == lor_raw.size() && touhy.size() == lor_raw.size());
  const std::size_t n = lor_raw.size();
  const __m256d voff = _mm256_set1_pd(offset);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(lor_raw.data() + i), voff);
    _mm256_storeu_pd(out.data() + i, _mm256_sub_pd(d, _mm256_loadu_pd(touhy.data() + i)));
  }
  for (; i < n; ++i) out[i] = (lor_raw[i] - offset) - touhy[i];
}

void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out) {
  assert(out.size() == in.size());
  const std::size_t n = in.size();
  const std::size_t width = 2 * half_width + 1;
  if (n < width) {
    scalar::moving_average(in, half_width, out);
    return;
  }
  // Edges with truncated windows go through the reference.
  for (std::size_t i = 0; i < half_width; ++i) {
    const std::size_t hi = i + half_width;
    double sum = in[0];
    for (std::size_t j = 1; j <= hi; ++j) sum += in[j];
    out[i] = sum / static_cast<double>(hi + 1);
  }
  const __m256d vwidth = _mm256_set1_pd(static_cast<double>(width));
  const std::size_t end = n - half_width;
  std::size_t i = half_width;
  for (; i + kLanes <= end; i += kLanes) {
    const double* base = in.data() + (i - half_width);
    __m256d sum = _mm256_loadu_pd(base);
    for (std::size_t k = 1; k < width; ++k) sum = _mm256_add_pd(sum, _mm256_loadu_pd(base + k));
    _mm256_storeu_pd(out.data() + i, _mm256_div_pd(sum, vwidth));
  }
  for (; i < n; ++i) {
    const std::size_t lo = i - half_width;
    const std::size_t hi = std::min(n - 1, i + half_width);
    double sum = in[lo];
    for (std::size_t j = lo + 1; j <= hi; ++j) sum += in[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
}

void central_difference(std::span<const double> x, std::span<const double> t,
                        std::span<double> out) {
  assert(x.size() >= 2 && t.size() == x.size() && out.size() == x.size());
  const std::size_t n = x.size();
  out[0] = (x[1] - x[0]) / (t[1] - t[0]);
  std::size_t i = 1;
  for (; i + kLanes + 1 <= n; i += kLanes) {
    __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i + 1), _mm256_loadu_pd(x.data() + i - 1));
    __m256d dt = _mm256_sub_pd(_mm256_loadu_pd(t.data() + i + 1), _mm256_loadu_pd(t.data() + i - 1));
    _mm256_storeu_pd(out.data() + i, _mm256_div_pd(dx, dt));
  }
  for (; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i - 1]) / (t[i + 1] - t[i - 1]);
  out[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
}

}  // namespace episim::kernels::avx2
