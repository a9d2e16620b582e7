#pragma once

// Scripted trainee used for testing and batch simulation. The agent advances
// the needle at a steady speed, probes the LOR plunger in half-sine bursts,
// and stops after feeling a large enough drop in plunger resistance between
// consecutive probes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "episim/tissue_model.hpp"
#include "episim/trial_engine.hpp"

namespace episim {

struct StopPolicy {
  double force_drop_threshold = 3.0;  // N, on the LOR channel
  double reaction_delay_ms = 150.0;
};

struct AgentProfile {
  std::string name = "custom";
  double advance_speed = 2.0;   // mm/s
  double probe_rate = 2.5;      // Hz; 0 disables probing
  double probe_depth = 1.5;     // mm
  StopPolicy stop;
  double noise = 0.01;          // mm, position noise std-dev on each device
  double perception_noise = 0.05;  // N, std-dev of felt plunger resistance

  // Throws ValidationError.
  void validate() const;

  static AgentProfile novice();
  static AgentProfile intermediate();
  static AgentProfile expert();
  static std::optional<AgentProfile> named(std::string_view name);
};

struct PositionSample {
  double t;
  double p_touhy;
  double p_lor_raw;
};

struct AgentRun {
  std::vector<PositionSample> stream;  // 1 kHz, ends at the commit instant
  std::vector<double> probe_peak_times;  // s, scripted probe peaks
  bool detected_loss_of_resistance = false;
};

// Closed-loop run against the model; the agent senses LOR force through its
// own copy of the puncture state.
AgentRun run_synthetic_agent(const AgentProfile& profile, const PatientModel& model,
                             std::uint64_t seed);

// Feeds a run into a trial and commits it.
TrialRecord execute_run(const AgentRun& run, Trial& trial);

}  // namespace episim
