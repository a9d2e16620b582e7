// aarch64 variant; same operation order as the scalar reference.
#include "episim/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cassert>

namespace episim::kernels::neon {

namespace {
constexpr std::size_t kLanes = 2;
}

void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out) {
  assert(out.size() == depth.size() && terms.start.size() == depth.size());
  const std::size_t n = depth.size();
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t vscale = vdupq_n_f64(scale);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    float64x2_t u = vsubq_f64(vld1q_f64(depth.data() + i), vld1q_f64(terms.start.data() + i));
    u = vbslq_f64(vcltq_f64(u, zero), zero, u);
    u = vdivq_f64(u, vscale);
    float64x2_t f = vmulq_f64(u, vld1q_f64(terms.a3.data() + i));
    f = vaddq_f64(vld1q_f64(terms.a2.data() + i), f);
    f = vmulq_f64(u, f);
    f = vaddq_f64(vld1q_f64(terms.a1.data() + i), f);
    f = vmulq_f64(u, f);
    f = vaddq_f64(vld1q_f64(terms.a0.data() + i), f);
    vst1q_f64(out.data() + i, vbslq_f64(vcltq_f64(f, zero), zero, f));
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
  const float64x2_t voff = vdupq_n_f64(offset);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    float64x2_t d = vsubq_f64(vld1q_f64(lor_raw.data() + i), voff);
    vst1q_f64(out.data() + i, vsubq_f64(d, vld1q_f64(touhy.data() + i)));
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
  for (std::size_t i = 0; i < half_width; ++i) {
    const std::size_t hi = i + half_width;
    double sum = in[0];
    for (std::size_t j = 1; j <= hi; ++j) sum += in[j];
    out[i] = sum / static_cast<double>(hi + 1);
  }
  const float64x2_t vwidth = vdupq_n_f64(static_cast<double>(width));
  const std::size_t end = n - half_width;
  std::size_t i = half_width;
  for (; i + kLanes <= end; i += kLanes) {
    const double* base = in.data() + (i - half_width);
    float64x2_t sum = vld1q_f64(base);
    for (std::size_t k = 1; k < width; ++k) sum = vaddq_f64(sum, vld1q_f64(base + k));
    vst1q_f64(out.data() + i, vdivq_f64(sum, vwidth));
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
    float64x2_t dx = vsubq_f64(vld1q_f64(x.data() + i + 1), vld1q_f64(x.data() + i - 1));
    float64x2_t dt = vsubq_f64(vld1q_f64(t.data() + i + 1), vld1q_f64(t.data() + i - 1));
    vst1q_f64(out.data() + i, vdivq_f64(dx, dt));
  }
  for (; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i - 1]) / (t[i + 1] - t[i - 1]);
  out[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
}

}  // namespace episim::kernels::neon
