#pragma once

// Array kernels used by the force renderer and the kinematics pipeline.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 (x86-64) or NEON (aarch64) variant. The variant is
// picked once at runtime from the CPU feature set; the environment variable
// EPISIM_KERNELS=scalar forces the reference path.
//
// The SIMD variants perform the same IEEE operations in the same order as the
// scalar code (no FMA contraction, no reassociation), so their results are
// bit-identical to the reference. Tests rely on that.

#include <cstddef>
#include <span>
#include <string_view>

namespace episim::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

// ISA chosen for this process.
Isa active_isa();

// True when the given ISA can run on this machine (and was compiled in).
bool isa_available(Isa isa);

// Per-sample polynomial terms in structure-of-arrays form. Sample i is
// evaluated as a0 + u*(a1 + u*(a2 + u*a3)) with
// u = max(depth - start, 0) / scale, and the result clamped to >= 0.
struct CubicTerms {
  std::span<const double> start;
  std::span<const double> a0;
  std::span<const double> a1;
  std::span<const double> a2;
  std::span<const double> a3;
};

// Single-sample form of the cubic kernel; the scalar reference and the
// per-sample force path in the tissue model both call this.
inline double eval_cubic(double depth, double start, double a0, double a1, double a2, double a3,
                         double scale) {
  double u = depth - start;
  if (u < 0.0) u = 0.0;
  u = u / scale;
  double f = a0 + u * (a1 + u * (a2 + u * a3));
  return f < 0.0 ? 0.0 : f;
}

// Dispatched entry points. Spans must have equal length (out may alias no input).
void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out);

// out[i] = (lor_raw[i] - offset) - touhy[i]
void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out);

// Centered moving average over 2*half_width+1 samples; the window is truncated
// at the ends of the signal.
void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out);

// Central difference dx/dt on a possibly non-uniform time grid; one-sided at
// the ends. Requires in.size() >= 2.
void central_difference(std::span<const double> x, std::span<const double> t,
                        std::span<double> out);

namespace scalar {
void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out);
void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out);
void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out);
void central_difference(std::span<const double> x, std::span<const double> t,
                        std::span<double> out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#define EPISIM_HAVE_AVX2_KERNELS 1
namespace avx2 {
void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out);
void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out);
void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out);
void central_difference(std::span<const double> x, std::span<const double> t,
                        std::span<double> out);
}  // namespace avx2
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define EPISIM_HAVE_NEON_KERNELS 1
namespace neon {
void eval_cubic(std::span<const double> depth, const CubicTerms& terms, double scale,
                std::span<double> out);
void adjust_trajectory(std::span<const double> lor_raw, std::span<const double> touhy,
                       double offset, std::span<double> out);
void moving_average(std::span<const double> in, std::size_t half_width, std::span<double> out);
void central_difference(std::span<const double> x, std::span<const double> t,
                        std::span<double> out);
}  // namespace neon
#endif

}  // namespace episim::kernels
