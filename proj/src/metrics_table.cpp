#include "episim/metrics_table.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "episim/csv.hpp"

namespace episim {

std::vector<std::string> metrics_header() {
  std::vector<std::string> h{"participant_id",  "trial_index",         "kind",
                             "body_mass_kg",    "outcome",             "final_depth_mm",
                             "signed_error_mm", "abs_error_mm",        "probe_count",
                             "mean_probe_depth_mm", "mean_probe_rate_hz"};
  for (Tissue t : kModelTissues) h.push_back("density_" + std::string(tissue_name(t)));
  for (Tissue t : kModelTissues) h.push_back("velocity_" + std::string(tissue_name(t)) + "_mm_s");
  return h;
}

void write_metrics_csv(std::ostream& out, const std::vector<TrialMetrics>& rows) {
  out << csv::join(metrics_header()) << '\n';
  for (const auto& m : rows) {
    std::vector<std::string> f{m.participant_id,
                               std::to_string(m.trial_index),
                               std::string(trial_kind_name(m.kind)),
                               csv::format_number(m.body_mass),
                               std::string(outcome_name(m.outcome)),
                               csv::format_number(m.final_depth),
                               csv::format_number(m.error.signed_mm),
                               csv::format_number(m.error.absolute_mm),
                               std::to_string(m.probes.count),
                               csv::format_optional(m.probes.mean_depth),
                               csv::format_optional(m.probes.mean_rate)};
    for (Tissue t : kModelTissues) f.push_back(csv::format_number(m.probes.per_layer_density[layer_slot(t)]));
    for (Tissue t : kModelTissues) f.push_back(csv::format_optional(m.velocities[layer_slot(t)]));
    out << csv::join(f) << '\n';
  }
}

std::vector<TrialMetrics> read_metrics_csv(std::istream& in) {
  const csv::Table table = csv::read_table(in);
  if (table.header != metrics_header()) {
    throw std::invalid_argument("metrics CSV header does not match the expected schema");
  }
  std::vector<TrialMetrics> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    TrialMetrics m;
    std::size_t c = 0;
    m.participant_id = r[c++];
    m.trial_index = static_cast<int>(csv::parse_number(r[c++]));
    const auto kind = parse_trial_kind(r[c++]);
    if (!kind) throw std::invalid_argument("metrics CSV: unknown trial kind");
    m.kind = *kind;
    m.body_mass = csv::parse_number(r[c++]);
    const auto outcome = parse_outcome(r[c++]);
    if (!outcome) throw std::invalid_argument("metrics CSV: unknown outcome");
    m.outcome = *outcome;
    m.final_depth = csv::parse_number(r[c++]);
    m.error.signed_mm = csv::parse_number(r[c++]);
    m.error.absolute_mm = csv::parse_number(r[c++]);
    m.probes.count = static_cast<std::size_t>(csv::parse_number(r[c++]));
    m.probes.mean_depth = csv::parse_optional(r[c++]);
    m.probes.mean_rate = csv::parse_optional(r[c++]);
    for (Tissue t : kModelTissues) m.probes.per_layer_density[layer_slot(t)] = csv::parse_number(r[c++]);
    for (Tissue t : kModelTissues) m.velocities[layer_slot(t)] = csv::parse_optional(r[c++]);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace episim
