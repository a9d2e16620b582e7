#pragma once

// Hand-built trial records with known LOR probes, for checking the probe
// detector against ground truth.

#include <algorithm>
#include <random>
#include <vector>

#include "episim/trial_engine.hpp"

namespace fixture {

struct InjectedProbe {
  double t_peak;  // s, lands exactly on a sample
  double depth;   // mm
};

struct ProbeTrial {
  episim::TrialRecord record;
  std::vector<InjectedProbe> probes;
};

// Needle advances at `speed` from the skin. Each probe is a half-sine bump on
// the calibrated LOR channel, `width_ms` wide, peaking on a sample. The probe
// count, depths (>= 1 mm) and spacings (>= 100 ms) are random.
inline ProbeTrial make_probe_trial(std::uint64_t seed, double mass = 71.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_probes(0, 25);
  std::uniform_int_distribution<int> gap_ms(100, 900);
  std::uniform_int_distribution<int> half_width_ms(15, 45);
  std::uniform_real_distribution<double> depth(1.0, 4.0);
  std::uniform_real_distribution<double> noise(-0.0002, 0.0002);
  std::uniform_real_distribution<double> speed_dist(0.5, 3.0);
  const double speed = speed_dist(rng);
  const double offset = 118.0;

  struct Bump {
    int center;
    int half;
    double depth;
  };
  std::vector<Bump> bumps;
  int t_ms = 300;
  const int count = n_probes(rng);
  for (int i = 0; i < count; ++i) {
    const int half = half_width_ms(rng);
    bumps.push_back({t_ms, half, depth(rng)});
    t_ms += std::max(gap_ms(rng), 2 * half + 10);
  }
  const int total_ms = t_ms + 300;

  ProbeTrial out;
  auto& r = out.record;
  r.participant_id = "fixture";
  r.body_mass = mass;
  r.kind = episim::TrialKind::Test;
  r.lor_zero_offset = offset;
  r.samples.reserve(static_cast<std::size_t>(total_ms) + 1);
  for (int k = 0; k <= total_ms; ++k) {
    const double t = k / 1000.0;
    const double touhy = speed * t;
    double bump = 0.0;
    for (const auto& b : bumps) {
      const int dk = k - b.center;
      if (dk > -b.half && dk < b.half) {
        bump = b.depth * std::cos(0.5 * 3.141592653589793 * dk / b.half);
      }
    }
    const double lor = offset + touhy + bump + (k == 0 ? 0.0 : noise(rng));
    r.samples.push_back({t, touhy, lor, 0.0, 0.0});
  }
  r.final_depth = r.samples.back().p_touhy;
  for (const auto& b : bumps) out.probes.push_back({b.center / 1000.0, b.depth});
  return out;
}

}  // namespace fixture
