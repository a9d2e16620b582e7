#include "episim/synthetic_agent.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace episim {

void AgentProfile::validate() const {
  if (!(advance_speed > 0.0)) throw ValidationError("advance_speed must be > 0");
  if (!(probe_rate >= 0.0)) throw ValidationError("probe_rate must be >= 0");
  if (probe_rate > 0.0 && !(probe_depth > 0.0)) throw ValidationError("probe_depth must be > 0");
  if (!(stop.force_drop_threshold > 0.0)) throw ValidationError("force_drop_threshold must be > 0");
  if (!(stop.reaction_delay_ms > 0.0)) throw ValidationError("reaction_delay_ms must be > 0");
  if (!(noise >= 0.0) || !(perception_noise >= 0.0)) {
    throw ValidationError("noise levels must be >= 0");
  }
}

AgentProfile AgentProfile::novice() {
  AgentProfile p;
  p.name = "novice";
  p.advance_speed = 6.0;
  p.probe_rate = 0.6;
  p.probe_depth = 3.5;
  p.stop = {1.2, 500.0};
  p.noise = 0.03;
  p.perception_noise = 0.4;
  return p;
}

AgentProfile AgentProfile::intermediate() {
  AgentProfile p;
  p.name = "intermediate";
  p.advance_speed = 4.0;
  p.probe_rate = 1.2;
  p.probe_depth = 2.5;
  p.stop = {2.0, 300.0};
  p.noise = 0.02;
  p.perception_noise = 0.25;
  return p;
}

AgentProfile AgentProfile::expert() {
  AgentProfile p;
  p.name = "expert";
  p.advance_speed = 2.0;
  p.probe_rate = 2.5;
  p.probe_depth = 1.5;
  p.stop = {3.0, 150.0};
  p.noise = 0.01;
  p.perception_noise = 0.05;
  return p;
}

std::optional<AgentProfile> AgentProfile::named(std::string_view name) {
  if (name == "novice") return novice();
  if (name == "intermediate") return intermediate();
  if (name == "expert") return expert();
  return std::nullopt;
}

namespace {

constexpr double kStartDepthMm = -2.0;
constexpr double kHoldAfterStopS = 0.3;
constexpr double kOvershootLimitMm = 20.0;
constexpr double kMaxTrialS = 600.0;

enum class Phase { Advancing, Reacting, Holding };

// Probe burst timing on the 1 kHz grid.
struct Probe {
  std::int64_t start_tick;
  std::int64_t duration_ticks;  // even, so the peak lands on a tick
  double amplitude;

  std::int64_t peak_tick() const { return start_tick + duration_ticks / 2; }
  double displacement(std::int64_t tick) const {
    if (tick < start_tick || tick > start_tick + duration_ticks) return 0.0;
    const double phase = static_cast<double>(tick - start_tick) / static_cast<double>(duration_ticks);
    return amplitude * std::sin(std::numbers::pi * phase);
  }
};

}  // namespace

AgentRun run_synthetic_agent(const AgentProfile& profile, const PatientModel& model,
                             std::uint64_t seed) {
  profile.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto jitter = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double speed = profile.advance_speed * jitter(0.85, 1.15);
  const double delay_s = profile.stop.reaction_delay_ms * 1e-3 * jitter(0.8, 1.2);
  const double syringe_length = jitter(105.0, 150.0);

  std::int64_t probe_ticks = 0;
  double mean_interval_s = 0.0;
  if (profile.probe_rate > 0.0) {
    mean_interval_s = 1.0 / profile.probe_rate;
    const double dur_s = std::min(0.25, 0.5 * mean_interval_s);
    probe_ticks = std::max<std::int64_t>(40, 2 * static_cast<std::int64_t>(std::lround(dur_s * 500.0)));
  }
  auto interval_ticks = [&] {
    return static_cast<std::int64_t>(std::lround(mean_interval_s * jitter(0.9, 1.1) * kSampleRateHz));
  };

  AgentRun run;
  PunctureState felt_state;
  Phase phase = Phase::Advancing;
  double depth = kStartDepthMm;
  std::optional<Probe> probe;
  std::optional<std::int64_t> next_probe_tick;
  std::optional<double> last_felt;
  std::int64_t stop_tick = 0;
  std::int64_t commit_tick = -1;
  const double max_depth = model.total_depth() + kOvershootLimitMm;

  for (std::int64_t tick = 0;; ++tick) {
    const double t = static_cast<double>(tick) / kSampleRateHz;
    if (phase != Phase::Holding) {
      if (phase == Phase::Reacting && tick >= stop_tick) {
        phase = Phase::Holding;
        commit_tick = tick + static_cast<std::int64_t>(kHoldAfterStopS * kSampleRateHz);
      } else {
        depth += speed * kSamplePeriodS;
        if (phase == Phase::Advancing && (depth > max_depth || t > kMaxTrialS)) {
          phase = Phase::Holding;
          commit_tick = tick + static_cast<std::int64_t>(kHoldAfterStopS * kSampleRateHz);
        }
      }
    }

    // Probing starts once the needle is in the skin and stops with the needle.
    if (probe_ticks > 0 && phase != Phase::Holding) {
      if (!next_probe_tick && depth > 0.0) next_probe_tick = tick + interval_ticks() / 2;
      if (next_probe_tick && tick >= *next_probe_tick && (!probe || tick > probe->start_tick + probe->duration_ticks)) {
        probe = Probe{tick, probe_ticks, profile.probe_depth * jitter(0.8, 1.2)};
        next_probe_tick = tick + std::max(interval_ticks(), probe_ticks + 2);
        run.probe_peak_times.push_back(static_cast<double>(probe->peak_tick()) / kSampleRateHz);
      }
    }
    const double plunger = probe ? probe->displacement(tick) : 0.0;

    const double p_touhy = depth + profile.noise * gauss(rng);
    const double p_lor_raw = syringe_length + depth + plunger + profile.noise * gauss(rng);
    run.stream.push_back({t, p_touhy, p_lor_raw});

    model.update_punctures(p_touhy, felt_state);
    if (probe && tick == probe->peak_tick()) {
      const double felt =
          model.lor_force(p_touhy, felt_state) + profile.perception_noise * gauss(rng);
      if (phase == Phase::Advancing && last_felt &&
          *last_felt - felt >= profile.stop.force_drop_threshold) {
        phase = Phase::Reacting;
        run.detected_loss_of_resistance = true;
        stop_tick = tick + static_cast<std::int64_t>(std::lround(delay_s * kSampleRateHz));
      }
      last_felt = felt;
    }

    if (phase == Phase::Holding && tick >= commit_tick) break;
  }
  return run;
}

TrialRecord execute_run(const AgentRun& run, Trial& trial) {
  for (const auto& s : run.stream) trial.ingest(s.t, s.p_touhy, s.p_lor_raw);
  return trial.commit();
}

}  // namespace episim
