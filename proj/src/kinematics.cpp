#include "episim/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "episim/kernels.hpp"

namespace episim {

AdjustedTrajectory adjust_lor(const TrialRecord& record) {
  if (!record.lor_zero_offset) {
    throw AnalysisError("record has no LOR zero offset: the needle never reached the skin");
  }
  const std::size_t n = record.samples.size();
  std::vector<double> lor(n), touhy(n), adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    lor[i] = record.samples[i].p_lor_raw;
    touhy[i] = record.samples[i].p_touhy;
  }
  kernels::adjust_trajectory(lor, touhy, *record.lor_zero_offset, adj);

  AdjustedTrajectory out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(touhy[i] > 0.0)) continue;
    out.t.push_back(record.samples[i].t);
    out.p_adj.push_back(adj[i]);
    out.p_touhy.push_back(touhy[i]);
  }
  return out;
}

double peak_prominence(std::span<const double> x, std::size_t index) {
  const double h = x[index];
  double left_min = h;
  for (std::size_t k = index; k-- > 0;) {
    if (x[k] > h) break;
    left_min = std::min(left_min, x[k]);
  }
  double right_min = h;
  for (std::size_t k = index + 1; k < x.size(); ++k) {
    if (x[k] > h) break;
    right_min = std::min(right_min, x[k]);
  }
  return h - std::max(left_min, right_min);
}

std::vector<std::size_t> find_peaks(std::span<const double> x, std::span<const double> t,
                                    const PeakParams& params) {
  if (t.size() != x.size()) throw std::invalid_argument("find_peaks: signal and time differ in length");
  const std::size_t n = x.size();
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(x[i] > x[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 < n && x[j + 1] < x[i] && x[i] >= params.min_prominence &&
        peak_prominence(x, i) >= params.min_prominence) {
      peaks.push_back(i);
    }
    i = j;
  }

  if (peaks.size() < 2 || params.min_separation <= 0.0) return peaks;
  std::vector<std::size_t> order(peaks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[peaks[a]] > x[peaks[b]]; });
  std::vector<bool> removed(peaks.size(), false);
  for (std::size_t o : order) {
    if (removed[o]) continue;
    const double tp = t[peaks[o]];
    for (std::size_t k = o; k-- > 0 && tp - t[peaks[k]] < params.min_separation;) removed[k] = true;
    for (std::size_t k = o + 1; k < peaks.size() && t[peaks[k]] - tp < params.min_separation; ++k) {
      removed[k] = true;
    }
  }
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    if (!removed[k]) kept.push_back(peaks[k]);
  }
  return kept;
}

std::vector<ProbeEvent> detect_probes(const AdjustedTrajectory& traj, const PatientModel& model,
                                      const PeakParams& params) {
  std::vector<ProbeEvent> events;
  for (std::size_t i : find_peaks(traj.p_adj, traj.t, params)) {
    const auto layer = model.tissue_at(traj.p_touhy[i]);
    events.push_back({traj.t[i], traj.p_adj[i], layer.value_or(Tissue::Skin)});
  }
  return events;
}

ProbeMetrics probe_metrics(std::span<const ProbeEvent> events, const PatientModel& model) {
  ProbeMetrics m;
  m.count = events.size();
  if (!events.empty()) {
    double sum = 0.0;
    for (const auto& e : events) sum += e.depth;
    m.mean_depth = sum / static_cast<double>(events.size());
  }
  if (events.size() >= 2) {
    double sum = 0.0;
    for (std::size_t i = 1; i < events.size(); ++i) sum += 1.0 / (events[i].t_peak - events[i - 1].t_peak);
    m.mean_rate = sum / static_cast<double>(events.size() - 1);
  }
  for (const auto& e : events) {
    if (e.layer == Tissue::DuraMater) continue;
    ++m.per_layer_count[layer_slot(e.layer)];
  }
  for (Tissue tissue : kModelTissues) {
    const auto slot = layer_slot(tissue);
    m.per_layer_density[slot] =
        static_cast<double>(m.per_layer_count[slot]) / model.tissue_band(tissue).width();
  }
  return m;
}

namespace {

// |velocity| per sample after the moving-average prefilter.
std::vector<double> needle_speeds(const TrialRecord& record) {
  const std::size_t n = record.samples.size();
  std::vector<double> p(n), t(n), smooth(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = record.samples[i].p_touhy;
    t[i] = record.samples[i].t;
  }
  kernels::moving_average(p, kVelocityFilterWidth / 2, smooth);
  kernels::central_difference(smooth, t, v);
  for (double& x : v) x = std::abs(x);
  return v;
}

}  // namespace

LayerValues layer_velocities(const TrialRecord& record, const PatientModel& model) {
  LayerValues out{};
  if (record.samples.size() < 2) return out;
  const auto speed = needle_speeds(record);
  std::array<double, kModelTissues.size()> sum{};
  std::array<std::size_t, kModelTissues.size()> count{};
  for (std::size_t i = 0; i < speed.size(); ++i) {
    const auto tissue = model.tissue_at(record.samples[i].p_touhy);
    if (!tissue || *tissue == Tissue::DuraMater) continue;
    sum[layer_slot(*tissue)] += speed[i];
    ++count[layer_slot(*tissue)];
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (count[k] > 0) out[k] = sum[k] / static_cast<double>(count[k]);
  }
  return out;
}

std::array<double, kModelTissues.size()> layer_dwell_times(const TrialRecord& record,
                                                           const PatientModel& model) {
  std::array<double, kModelTissues.size()> dwell{};
  const auto& s = record.samples;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const auto tissue = model.tissue_at(s[i].p_touhy);
    if (!tissue || *tissue == Tissue::DuraMater) continue;
    dwell[layer_slot(*tissue)] += s[i + 1].t - s[i].t;
  }
  return dwell;
}

ErrorSize error_size(const TrialRecord& record, const PatientModel& model) {
  const Outcome o = model.classify_outcome(record.final_depth);
  return {o.signed_error_mm, std::abs(o.signed_error_mm)};
}

TrialMetrics analyze_trial(const TrialRecord& record, const PeakParams& params) {
  const PatientModel model = build_patient_model(record.body_mass);
  TrialMetrics m;
  m.participant_id = record.participant_id;
  m.trial_index = record.trial_index;
  m.kind = record.kind;
  m.body_mass = record.body_mass;
  m.final_depth = record.final_depth;
  m.outcome = model.classify_outcome(record.final_depth).kind;
  m.error = error_size(record, model);
  if (record.lor_zero_offset) {
    const auto traj = adjust_lor(record);
    const auto events = detect_probes(traj, model, params);
    m.probes = probe_metrics(events, model);
  } else {
    m.probes = probe_metrics({}, model);
  }
  m.velocities = layer_velocities(record, model);
  return m;
}

}  // namespace episim
