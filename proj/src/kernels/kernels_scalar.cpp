#include "episim/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace episim::kernels::scalar {

void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out) {
  assert(out.size() == depth.size() && terms.start.size() == depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    out[i] = kernels::eval_cubic(depth[i], terms.start[i], terms.a0[i], terms.a1[i], terms.a2[i],
                                 terms.a3[i], scale);
  }
}

void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out) {
  assert(out.size() == lor_raw.size() && touhy.size() == lor_raw.size());
  for (std::size_t i = 0; i < lor_raw.size(); ++i) {
    out[i] = (lor_raw[i] - offset) - touhy[i];
  }
}

void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out) {
  assert(out.size() == in.size());
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half_width ? i - half_width : 0;
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
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (x[i + 1] - x[i - 1]) / (t[i + 1] - t[i - 1]);
  }
  out[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
}

}  // namespace episim::kernels::scalar
