#pragma once

// Offline kinematics of a committed trial: LOR trajectory adjustment, probe
// detection, probe statistics, per-layer velocity, and error size.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "episim/tissue_model.hpp"
#include "episim/trial_engine.hpp"

namespace episim {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plunger motion relative to the needle after zero-point calibration,
// restricted to samples where the needle is inside the back (p_touhy > 0).
struct AdjustedTrajectory {
  std::vector<double> t;
  std::vector<double> p_adj;    // mm
  std::vector<double> p_touhy;  // mm, needle depth at the same instants
};

AdjustedTrajectory adjust_lor(const TrialRecord& record);

struct PeakParams {
  double min_prominence = 0.5;   // mm; also the minimum peak height
  double min_separation = 0.05;  // s
};

// findpeaks-style local maxima: strict rise into the peak (plateaus report
// their first sample), prominence against the lowest point between the peak
// and the nearest higher sample on each side, then tallest-first suppression
// of peaks closer than min_separation. Returns ascending indices.
std::vector<std::size_t> find_peaks(std::span<const double> signal, std::span<const double> t,
                                    const PeakParams& params);

// Prominence of the sample at `index` (no filtering).
double peak_prominence(std::span<const double> signal, std::size_t index);

struct ProbeEvent {
  double t_peak = 0.0;  // s
  double depth = 0.0;   // mm, peak height above the calibrated zero
  Tissue layer = Tissue::Skin;
};

std::vector<ProbeEvent> detect_probes(const AdjustedTrajectory& traj, const PatientModel& model,
                                      const PeakParams& params = {});

using LayerValues = std::array<std::optional<double>, kModelTissues.size()>;

inline std::size_t layer_slot(Tissue t) { return static_cast<std::size_t>(t); }

struct ProbeMetrics {
  std::size_t count = 0;
  std::optional<double> mean_depth;  // mm
  std::optional<double> mean_rate;   // Hz, needs >= 2 probes
  // Probes per mm of (mass-scaled) tissue thickness; every modelled tissue
  // has a value, 0 when no probe landed in it.
  std::array<double, kModelTissues.size()> per_layer_density{};
  std::array<std::size_t, kModelTissues.size()> per_layer_count{};
};

ProbeMetrics probe_metrics(std::span<const ProbeEvent> events, const PatientModel& model);

// Velocity estimation: centered moving average of this many samples, then
// central differences.
inline constexpr std::size_t kVelocityFilterWidth = 21;

// Mean |dp/dt| of the needle over samples inside each tissue; tissues never
// entered are empty.
LayerValues layer_velocities(const TrialRecord& record, const PatientModel& model);

// Time spent inside each tissue (s); zero when never entered.
std::array<double, kModelTissues.size()> layer_dwell_times(const TrialRecord& record,
                                                           const PatientModel& model);

struct ErrorSize {
  double signed_mm = 0.0;
  double absolute_mm = 0.0;
};

ErrorSize error_size(const TrialRecord& record, const PatientModel& model);

// Everything the metrics table holds for one trial.
struct TrialMetrics {
  std::string participant_id;
  int trial_index = 0;
  TrialKind kind = TrialKind::Test;
  double body_mass = 0.0;
  OutcomeKind outcome = OutcomeKind::Success;
  double final_depth = 0.0;
  ErrorSize error;
  ProbeMetrics probes;
  LayerValues velocities{};
};

TrialMetrics analyze_trial(const TrialRecord& record, const PeakParams& params = {});

}  // namespace episim
