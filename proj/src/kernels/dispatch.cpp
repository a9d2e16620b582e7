#include "episim/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace episim::kernels {

namespace {

struct Table {
  Isa isa;
  void (*eval_cubic)(std::span<const double>, const CubicTerms&, double, std::span<double>);
  void (*adjust_trajectory)(std::span<const double>, std::span<const double>, double,
                            std::span<double>);
  void (*moving_average)(std::span<const double>, std::size_t, std::span<double>);
  void (*central_difference)(std::span<const double>, std::span<const double>,
                             std::span<double>);
};

constexpr Table kScalar{Isa::Scalar, scalar::eval_cubic, scalar::adjust_trajectory,
                        scalar::moving_average, scalar::central_difference};

Table select() {
  if (const char* forced = std::getenv("EPISIM_KERNELS");
      forced != nullptr && std::string_view(forced) == "scalar") {
    return kScalar;
  }
#if defined(EPISIM_HAVE_AVX2_KERNELS)
  if (isa_available(Isa::Avx2)) {
    return {Isa::Avx2, avx2::eval_cubic, avx2::adjust_trajectory, avx2::moving_average,
            avx2::central_difference};
  }
#endif
#if defined(EPISIM_HAVE_NEON_KERNELS)
  return {Isa::Neon, neon::eval_cubic, neon::adjust_trajectory, neon::moving_average,
          neon::central_difference};
#endif
  return kScalar;
}

const Table& table() {
  static const Table t = select();
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(EPISIM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(EPISIM_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return table().isa; }

void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out) {
  table().eval_cubic(depth, terms, scale, out);
}

void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out) {
  table().adjust_trajectory(lor_raw, touhy, offset, out);
}

void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out) {
  table().moving_average(in, half_width, out);
}

void central_difference(std::span<const double> x, std::span<const double> t,
                        std::span<double> out) {
  table().central_difference(x, t, out);
}

}  // namespace episim::kernels
