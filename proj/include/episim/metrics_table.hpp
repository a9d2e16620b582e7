#pragma once

// Per-trial metrics table (CSV) written by `analyze` and read by `report`.
//
// Columns, in order:
//   participant_id, trial_index, kind, body_mass_kg, outcome, final_depth_mm,
//   signed_error_mm, abs_error_mm, probe_count, mean_probe_depth_mm,
//   mean_probe_rate_hz, density_<tissue> x6 (probes/mm),
//   velocity_<tissue>_mm_s x6
// where <tissue> runs skin, fat, supraspinous, interspinous,
// ligamentum_flavum, epidural_space. Absent values are empty fields.

#include <iosfwd>
#include <string>
#include <vector>

#include "episim/kinematics.hpp"

namespace episim {

std::vector<std::string> metrics_header();
void write_metrics_csv(std::ostream& out, const std::vector<TrialMetrics>& rows);
std::vector<TrialMetrics> read_metrics_csv(std::istream& in);

}  // namespace episim
