#pragma once

// Sessions and trials: the mass schedule, the per-sample force loop, puncture
// bookkeeping, and outcome on commit.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "episim/tissue_model.hpp"

namespace episim {

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TrialKind : std::uint8_t { Familiarization, Test };

std::string_view trial_kind_name(TrialKind k);
std::optional<TrialKind> parse_trial_kind(std::string_view name);

struct SessionConfig {
  int n_familiarization = 3;
  double familiarization_mass = 71.0;
  std::vector<double> test_masses{55.0, 85.0, 115.0};
  int blocks = 4;
  std::uint64_t rng_seed = 0;
  bool feedback_in_familiarization = true;

  // Throws ValidationError.
  void validate() const;
  std::size_t schedule_length() const;
};

struct ScheduledTrial {
  TrialKind kind;
  double body_mass;
  bool operator==(const ScheduledTrial&) const = default;
};

// Familiarization trials first, then `blocks` blocks, each a seeded
// permutation of the test masses.
std::vector<ScheduledTrial> generate_schedule(const SessionConfig& config);

// Logging rate of the trial loop.
inline constexpr double kSampleRateHz = 1000.0;
inline constexpr double kSamplePeriodS = 1.0 / kSampleRateHz;

struct Sample {
  double t = 0.0;          // s since trial start
  double p_touhy = 0.0;    // mm, depth-positive
  double p_lor_raw = 0.0;  // mm, uncalibrated
  double f_touhy = 0.0;    // N
  double f_lor = 0.0;      // N
  bool operator==(const Sample&) const = default;
};

struct Forces {
  double touhy = 0.0;
  double lor = 0.0;
};

struct TrialRecord {
  std::string participant_id;
  int trial_index = 0;
  TrialKind kind = TrialKind::Test;
  double body_mass = body::kReferenceMassKg;
  bool feedback_allowed = false;
  std::vector<Sample> samples;
  double final_depth = 0.0;
  PunctureState punctures;
  Outcome outcome;
  std::optional<double> lor_zero_offset;

  bool operator==(const TrialRecord&) const = default;
};

// One trial in progress. Samples must arrive with strictly increasing t.
class Trial {
 public:
  Trial(int trial_index, TrialKind kind, double body_mass, bool feedback_allowed,
        std::string participant_id = {});

  // Appends a sample and returns the forces rendered for it. Throws
  // SampleError for non-increasing or non-finite input and StateError after
  // commit.
  Forces ingest(double t, double p_touhy, double p_lor_raw);

  // Forces at a position under the current puncture state, without logging.
  Forces preview(double p_touhy) const;

  // Seals the trial. Throws StateError when empty or already committed.
  TrialRecord commit();

  bool active() const { return active_; }
  std::size_t sample_count() const { return record_.samples.size(); }
  const PatientModel& model() const { return model_; }
  const PunctureState& punctures() const { return record_.punctures; }
  int trial_index() const { return record_.trial_index; }
  TrialKind kind() const { return record_.kind; }
  double body_mass() const { return record_.body_mass; }

 private:
  PatientModel model_;
  TrialRecord record_;
  bool active_ = true;
};

// Resamples irregular position updates onto the 1 kHz logging grid with a
// zero-order hold: grid tick k (t = k ms) carries the latest update whose
// timestamp is <= t. Time comes from the update stream, not the wall clock.
class HoldResampler {
 public:
  explicit HoldResampler(Trial& trial) : trial_(&trial) {}

  // Logs all ticks strictly before t with the held position, then holds the
  // new one. Returns the forces at the new position.
  Forces update(double t, double p_touhy, double p_lor_raw);

  // Logs the held position on the first tick at or after the last update.
  void flush();

  std::int64_t next_tick() const { return next_tick_; }

 private:
  Trial* trial_;
  bool have_position_ = false;
  double last_t_ = 0.0;
  double held_touhy_ = 0.0;
  double held_lor_ = 0.0;
  std::int64_t next_tick_ = 0;
};

// Re-runs a record's position stream through a fresh trial.
TrialRecord replay(const TrialRecord& record);

// Describes the first divergence between two records, or nullopt when they
// are bit-identical. Forces are additionally cross-checked against the batch
// (SIMD) evaluation path.
std::optional<std::string> verify_replay(const TrialRecord& record);

// A session walks a schedule one trial at a time.
class Session {
 public:
  explicit Session(SessionConfig config, std::string participant_id = {});

  const SessionConfig& config() const { return config_; }
  const std::vector<ScheduledTrial>& schedule() const { return schedule_; }
  const std::vector<TrialRecord>& records() const { return records_; }

  bool finished() const { return next_index_ >= schedule_.size() && !trial_; }
  bool trial_active() const { return trial_.has_value(); }

  // Throws StateError when a trial is already running or the schedule is
  // exhausted.
  Trial& start_trial();
  Trial& current_trial();
  const TrialRecord& commit_trial();
  void abort_trial() { trial_.reset(); }

 private:
  SessionConfig config_;
  std::string participant_id_;
  std::vector<ScheduledTrial> schedule_;
  std::vector<TrialRecord> records_;
  std::optional<Trial> trial_;
  std::size_t next_index_ = 0;
};

}  // namespace episim
