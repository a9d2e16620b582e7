#pragma once

// Validity assessment: anesthesiologist level assignment, questionnaire (VAS)
// aggregation, and the study report that groups trial metrics by level and by
// outcome and runs the rank tests on them.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "episim/kinematics.hpp"
#include "episim/stats.hpp"

namespace episim {

enum class Position : std::uint8_t { Resident, Attending, Unspecified };

std::string_view position_name(Position p);
std::optional<Position> parse_position(std::string_view name);

struct ParticipantProfile {
  std::string id;
  std::optional<double> years_experience;
  std::optional<double> n_epidurals_estimate;
  Position position = Position::Unspecified;
  std::map<std::string, double> vas_responses;  // question -> 0..100 mm

  // Throws ValidationError.
  void validate() const;
};

// Per-category levels: years [0,1] (1,3] >3; epidurals [0,50] (50,300] >300;
// Resident 1, Attending 3, otherwise no contribution. Overall level is the
// mean of the available categories rounded half up. Throws ValidationError
// when no category is available.
int assign_level(const ParticipantProfile& profile);

inline constexpr double kExperiencedEpidurals = 500.0;

// Profile CSV: participant_id,years_experience,n_epidurals_estimate,position
// followed by any number of vas_<question> columns (0..100, empty = no answer).
std::vector<ParticipantProfile> read_profiles_csv(std::istream& in);
void write_profiles_csv(std::ostream& out, const std::vector<ParticipantProfile>& profiles);

struct GroupSummary {
  std::string group;
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<stats::Interval> ci;
};

// One metric broken down by groups, optionally with a test across them.
struct Comparison {
  std::string metric;
  std::vector<GroupSummary> groups;
  std::optional<stats::StatResult> test;
};

// Mean and bootstrap CI per group; the seed for each group's bootstrap is
// derived from (seed, metric, group).
GroupSummary summarize_group(std::string_view metric, std::string group,
                             const std::vector<double>& values, std::uint64_t seed);

// Per question: Inexperienced (< 500 epidurals) vs Experienced groups.
// Participants without any responses are left out.
std::vector<Comparison> vas_report(const std::vector<ParticipantProfile>& profiles,
                                   std::uint64_t seed = 0);

struct ParticipantSummary {
  std::string id;
  int level = 0;
  std::size_t n_trials = 0;
  double failed_epidural_rate = 0.0;
  double success_rate = 0.0;
  double dural_puncture_rate = 0.0;
  double mean_abs_error = 0.0;
  double mean_probe_count = 0.0;
  std::optional<double> mean_probe_depth;
  std::optional<double> mean_probe_rate;
};

struct StudyReport {
  std::vector<ParticipantSummary> participants;
  std::vector<std::string> unmatched;  // participant ids with metrics but no profile
  Comparison outcome_rates_fe;          // per level
  Comparison outcome_rates_success;     // per level, Kruskal-Wallis
  Comparison outcome_rates_dp;          // per level
  std::vector<Comparison> error_types;  // per level: FE vs DP, signed-rank
  Comparison abs_error;                 // per level, Kruskal-Wallis
  std::vector<Comparison> probes_by_level;
  std::vector<Comparison> probes_by_outcome;
  std::vector<Comparison> layer_density;   // one per tissue, groups are levels
  std::vector<Comparison> layer_velocity;  // one per tissue, groups are levels
  std::vector<Comparison> vas;
};

// Uses test trials only.
StudyReport study_report(const std::vector<TrialMetrics>& metrics,
                         const std::vector<ParticipantProfile>& profiles, std::uint64_t seed = 0);

// Writes the CSV tables and summary.json into dir (created if needed).
void write_report(const StudyReport& report, const std::filesystem::path& dir);

}  // namespace episim
