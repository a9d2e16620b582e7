#include "episim/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "episim/csv.hpp"
#include "episim/record_io.hpp"
#include "json.hpp"

namespace episim {

std::string_view position_name(Position p) {
  switch (p) {
    case Position::Resident: return "resident";
    case Position::Attending: return "attending";
    case Position::Unspecified: return "unspecified";
  }
  return "unspecified";
}

std::optional<Position> parse_position(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "resident") return Position::Resident;
  if (lower == "attending") return Position::Attending;
  if (lower.empty() || lower == "unspecified") return Position::Unspecified;
  return std::nullopt;
}

void ParticipantProfile::validate() const {
  if (years_experience && !(*years_experience >= 0.0)) {
    throw ValidationError("participant " + id + ": years_experience must be >= 0");
  }
  if (n_epidurals_estimate && !(*n_epidurals_estimate >= 0.0)) {
    throw ValidationError("participant " + id + ": n_epidurals_estimate must be >= 0");
  }
  for (const auto& [q, score] : vas_responses) {
    if (!(score >= 0.0 && score <= 100.0)) {
      throw ValidationError("participant " + id + ": VAS score for '" + q + "' outside [0, 100]");
    }
  }
}

int assign_level(const ParticipantProfile& p) {
  p.validate();
  int sum = 0;
  int count = 0;
  if (p.years_experience) {
    const double y = *p.years_experience;
    sum += y <= 1.0 ? 1 : (y <= 3.0 ? 2 : 3);
    ++count;
  }
  if (p.n_epidurals_estimate) {
    const double e = *p.n_epidurals_estimate;
    sum += e <= 50.0 ? 1 : (e <= 300.0 ? 2 : 3);
    ++count;
  }
  if (p.position == Position::Resident) {
    sum += 1;
    ++count;
  } else if (p.position == Position::Attending) {
    sum += 3;
    ++count;
  }
  if (count == 0) throw ValidationError("participant " + p.id + ": no level category available");
  // Round half up in integers: floor(sum/count + 1/2).
  return (2 * sum + count) / (2 * count);
}

// ---------------------------------------------------------------------------
// Profiles CSV

namespace {
constexpr std::string_view kVasPrefix = "vas_";
}

std::vector<ParticipantProfile> read_profiles_csv(std::istream& in) {
  const csv::Table table = csv::read_table(in);
  const std::size_t c_id = table.column("participant_id");
  const std::size_t c_years = table.column("years_experience");
  const std::size_t c_epi = table.column("n_epidurals_estimate");
  const std::size_t c_pos = table.column("position");
  std::vector<std::pair<std::size_t, std::string>> vas_cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i].starts_with(kVasPrefix)) {
      vas_cols.emplace_back(i, table.header[i].substr(kVasPrefix.size()));
    }
  }
  std::vector<ParticipantProfile> out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    ParticipantProfile p;
    p.id = row[c_id];
    if (p.id.empty()) throw ValidationError("profile row with empty participant_id");
    if (!seen.insert(p.id).second) throw ValidationError("duplicate participant_id " + p.id);
    p.years_experience = csv::parse_optional(row[c_years]);
    p.n_epidurals_estimate = csv::parse_optional(row[c_epi]);
    const auto pos = parse_position(row[c_pos]);
    if (!pos) throw ValidationError("participant " + p.id + ": unknown position '" + row[c_pos] + "'");
    p.position = *pos;
    for (const auto& [col, question] : vas_cols) {
      if (auto v = csv::parse_optional(row[col])) p.vas_responses[question] = *v;
    }
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

void write_profiles_csv(std::ostream& out, const std::vector<ParticipantProfile>& profiles) {
  std::set<std::string> questions;
  for (const auto& p : profiles) {
    for (const auto& [q, _] : p.vas_responses) questions.insert(q);
  }
  std::vector<std::string> header{"participant_id", "years_experience", "n_epidurals_estimate",
                                  "position"};
  for (const auto& q : questions) header.push_back(std::string(kVasPrefix) + q);
  out << csv::join(header) << '\n';
  for (const auto& p : profiles) {
    std::vector<std::string> row{p.id, csv::format_optional(p.years_experience),
                                 csv::format_optional(p.n_epidurals_estimate),
                                 std::string(position_name(p.position))};
    for (const auto& q : questions) {
      auto it = p.vas_responses.find(q);
      row.push_back(it == p.vas_responses.end() ? std::string() : csv::format_number(it->second));
    }
    out << csv::join(row) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Group summaries

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string level_label(int level) { return "L" + std::to_string(level); }

// Kruskal-Wallis across the non-empty groups; post-hoc indices refer to
// positions in `groups`.
std::optional<stats::StatResult> kw_over(const std::vector<std::vector<double>>& groups) {
  std::vector<std::vector<double>> used;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!groups[i].empty()) {
      used.push_back(groups[i]);
      index.push_back(i);
    }
  }
  if (used.size() < 2) return std::nullopt;
  auto r = stats::kruskal_wallis(used);
  for (auto& ph : r.post_hoc) {
    ph.group_a = index[ph.group_a];
    ph.group_b = index[ph.group_b];
  }
  return r;
}

Comparison compare(std::string metric, const std::vector<std::string>& labels,
                   const std::vector<std::vector<double>>& values, std::uint64_t seed,
                   bool with_test) {
  Comparison c;
  c.metric = std::move(metric);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    c.groups.push_back(summarize_group(c.metric, labels[i], values[i], seed));
  }
  if (with_test) c.test = kw_over(values);
  return c;
}

double mean_of(const std::vector<double>& v) { return stats::mean(v); }

std::optional<double> mean_if_any(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return stats::mean(v);
}

}  // namespace

GroupSummary summarize_group(std::string_view metric, std::string group,
                             const std::vector<double>& values, std::uint64_t seed) {
  GroupSummary g;
  g.group = std::move(group);
  g.n = values.size();
  if (!values.empty()) {
    g.mean = stats::mean(values);
    g.ci = stats::bootstrap_ci(values, stats::mean, 10000,
                               fnv1a(g.group, fnv1a(metric, seed ^ 0x5eedULL)));
  }
  return g;
}

std::vector<Comparison> vas_report(const std::vector<ParticipantProfile>& profiles,
                                   std::uint64_t seed) {
  std::set<std::string> questions;
  for (const auto& p : profiles) {
    for (const auto& [q, _] : p.vas_responses) questions.insert(q);
  }
  std::vector<Comparison> out;
  for (const auto& q : questions) {
    std::vector<std::vector<double>> values(2);
    for (const auto& p : profiles) {
      if (p.vas_responses.empty()) continue;
      auto it = p.vas_responses.find(q);
      if (it == p.vas_responses.end()) continue;
      const bool experienced =
          p.n_epidurals_estimate && *p.n_epidurals_estimate >= kExperiencedEpidurals;
      values[experienced ? 1 : 0].push_back(it->second);
    }
    out.push_back(compare("vas_" + q, {"inexperienced", "experienced"}, values, seed, false));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Study report

namespace {

constexpr std::array<OutcomeKind, 3> kOutcomes{OutcomeKind::FailedEpidural, OutcomeKind::Success,
                                               OutcomeKind::DuralPuncture};

struct ParticipantTrials {
  int level = 0;
  std::vector<const TrialMetrics*> trials;
};

}  // namespace

StudyReport study_report(const std::vector<TrialMetrics>& metrics,
                         const std::vector<ParticipantProfile>& profiles, std::uint64_t seed) {
  std::map<std::string, int> level_of;
  for (const auto& p : profiles) level_of[p.id] = assign_level(p);

  // Ordered by id so the report does not depend on input order.
  std::map<std::string, ParticipantTrials> by_participant;
  std::set<std::string> unmatched;
  for (const auto& m : metrics) {
    if (m.kind != TrialKind::Test) continue;
    auto lv = level_of.find(m.participant_id);
    if (lv == level_of.end()) {
      unmatched.insert(m.participant_id);
      continue;
    }
    auto& pt = by_participant[m.participant_id];
    pt.level = lv->second;
    pt.trials.push_back(&m);
  }

  StudyReport rep;
  rep.unmatched.assign(unmatched.begin(), unmatched.end());
  const std::vector<std::string> levels{level_label(1), level_label(2), level_label(3)};
  auto per_level = [] { return std::vector<std::vector<double>>(3); };

  auto fe = per_level(), succ = per_level(), dp = per_level(), abs_err = per_level();
  auto p_count = per_level(), p_depth = per_level(), p_rate = per_level();
  std::vector<std::vector<std::vector<double>>> density(kModelTissues.size(), per_level());
  std::vector<std::vector<std::vector<double>>> velocity(kModelTissues.size(), per_level());
  std::vector<std::vector<double>> fe_minus_dp(3);
  std::vector<std::vector<double>> o_count(3), o_depth(3), o_rate(3);

  for (const auto& [id, pt] : by_participant) {
    const std::size_t li = static_cast<std::size_t>(pt.level - 1);
    ParticipantSummary s;
    s.id = id;
    s.level = pt.level;
    s.n_trials = pt.trials.size();
    std::array<std::size_t, 3> n_outcome{};
    std::vector<double> errs, counts, depths, rates;
    std::array<std::vector<double>, 3> oc, od, orate;
    std::vector<std::vector<double>> dens(kModelTissues.size()), vel(kModelTissues.size());
    for (const TrialMetrics* m : pt.trials) {
      const auto oi = static_cast<std::size_t>(m->outcome);
      ++n_outcome[oi];
      errs.push_back(m->error.absolute_mm);
      counts.push_back(static_cast<double>(m->probes.count));
      oc[oi].push_back(static_cast<double>(m->probes.count));
      if (m->probes.mean_depth) {
        depths.push_back(*m->probes.mean_depth);
        od[oi].push_back(*m->probes.mean_depth);
      }
      if (m->probes.mean_rate) {
        rates.push_back(*m->probes.mean_rate);
        orate[oi].push_back(*m->probes.mean_rate);
      }
      for (Tissue t : kModelTissues) {
        const auto k = layer_slot(t);
        dens[k].push_back(m->probes.per_layer_density[k]);
        if (m->velocities[k]) vel[k].push_back(*m->velocities[k]);
      }
    }
    const double n = static_cast<double>(s.n_trials);
    s.failed_epidural_rate = static_cast<double>(n_outcome[0]) / n;
    s.success_rate = static_cast<double>(n_outcome[1]) / n;
    s.dural_puncture_rate = static_cast<double>(n_outcome[2]) / n;
    s.mean_abs_error = mean_of(errs);
    s.mean_probe_count = mean_of(counts);
    s.mean_probe_depth = mean_if_any(depths);
    s.mean_probe_rate = mean_if_any(rates);

    fe[li].push_back(s.failed_epidural_rate);
    succ[li].push_back(s.success_rate);
    dp[li].push_back(s.dural_puncture_rate);
    fe_minus_dp[li].push_back(s.failed_epidural_rate - s.dural_puncture_rate);
    abs_err[li].push_back(s.mean_abs_error);
    p_count[li].push_back(s.mean_probe_count);
    if (s.mean_probe_depth) p_depth[li].push_back(*s.mean_probe_depth);
    if (s.mean_probe_rate) p_rate[li].push_back(*s.mean_probe_rate);
    for (std::size_t oi = 0; oi < 3; ++oi) {
      if (auto v = mean_if_any(oc[oi])) o_count[oi].push_back(*v);
      if (auto v = mean_if_any(od[oi])) o_depth[oi].push_back(*v);
      if (auto v = mean_if_any(orate[oi])) o_rate[oi].push_back(*v);
    }
    for (std::size_t k = 0; k < kModelTissues.size(); ++k) {
      if (auto v = mean_if_any(dens[k])) density[k][li].push_back(*v);
      if (auto v = mean_if_any(vel[k])) velocity[k][li].push_back(*v);
    }
    rep.participants.push_back(std::move(s));
  }

  rep.outcome_rates_fe = compare("failed_epidural_rate", levels, fe, seed, false);
  rep.outcome_rates_success = compare("success_rate", levels, succ, seed, true);
  rep.outcome_rates_dp = compare("dural_puncture_rate", levels, dp, seed, false);
  for (std::size_t li = 0; li < 3; ++li) {
    Comparison c;
    c.metric = "error_types_" + levels[li];
    std::vector<double> fe_rates = fe[li], dp_rates = dp[li];
    c.groups.push_back(summarize_group(c.metric, "failed_epidural", fe_rates, seed));
    c.groups.push_back(summarize_group(c.metric, "dural_puncture", dp_rates, seed));
    if (!fe_minus_dp[li].empty()) c.test = stats::wilcoxon_signed_rank(fe_minus_dp[li]);
    rep.error_types.push_back(std::move(c));
  }
  rep.abs_error = compare("abs_error_mm", levels, abs_err, seed, true);
  rep.probes_by_level.push_back(compare("probe_count", levels, p_count, seed, true));
  rep.probes_by_level.push_back(compare("probe_depth_mm", levels, p_depth, seed, true));
  rep.probes_by_level.push_back(compare("probe_rate_hz", levels, p_rate, seed, true));
  std::vector<std::string> outcome_labels;
  for (auto o : kOutcomes) outcome_labels.emplace_back(outcome_name(o));
  rep.probes_by_outcome.push_back(compare("probe_count", outcome_labels, o_count, seed, true));
  rep.probes_by_outcome.push_back(compare("probe_depth_mm", outcome_labels, o_depth, seed, true));
  rep.probes_by_outcome.push_back(compare("probe_rate_hz", outcome_labels, o_rate, seed, true));
  for (Tissue t : kModelTissues) {
    const auto k = layer_slot(t);
    rep.layer_density.push_back(
        compare("density_" + std::string(tissue_name(t)), levels, density[k], seed, false));
    rep.layer_velocity.push_back(
        compare("velocity_" + std::string(tissue_name(t)), levels, velocity[k], seed, false));
  }
  rep.vas = vas_report(profiles, seed);
  return rep;
}

// ---------------------------------------------------------------------------
// Output

namespace {

using ojson = nlohmann::ordered_json;

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson test_json(const stats::StatResult& r, const std::vector<GroupSummary>& groups) {
  ojson j;
  j["test"] = r.test;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["exact"] = r.exact;
  j["n"] = r.n_effective;
  ojson ph = ojson::array();
  for (const auto& c : r.post_hoc) {
    ph.push_back({{"a", groups[c.group_a].group},
                  {"b", groups[c.group_b].group},
                  {"p", c.raw_p},
                  {"p_bonferroni", c.adjusted_p}});
  }
  j["post_hoc"] = std::move(ph);
  return j;
}

ojson comparison_json(const Comparison& c) {
  ojson j;
  j["metric"] = c.metric;
  ojson groups = ojson::array();
  for (const auto& g : c.groups) {
    groups.push_back({{"group", g.group},
                      {"n", g.n},
                      {"mean", opt_json(g.mean)},
                      {"ci_lo", g.ci ? ojson(g.ci->lo) : ojson(nullptr)},
                      {"ci_hi", g.ci ? ojson(g.ci->hi) : ojson(nullptr)}});
  }
  j["groups"] = std::move(groups);
  j["test"] = c.test ? test_json(*c.test, c.groups) : ojson(nullptr);
  return j;
}

void summary_rows(std::ostringstream& os, const Comparison& c) {
  for (const auto& g : c.groups) {
    os << csv::join({c.metric, g.group, std::to_string(g.n), csv::format_optional(g.mean),
                     g.ci ? csv::format_number(g.ci->lo) : std::string(),
                     g.ci ? csv::format_number(g.ci->hi) : std::string()})
       << '\n';
  }
}

std::string summary_csv(const std::vector<const Comparison*>& cs) {
  std::ostringstream os;
  os << "metric,group,n,mean,ci_lo,ci_hi\n";
  for (const auto* c : cs) summary_rows(os, *c);
  return os.str();
}

std::vector<const Comparison*> ptrs(const std::vector<Comparison>& v) {
  std::vector<const Comparison*> out;
  for (const auto& c : v) out.push_back(&c);
  return out;
}

}  // namespace

void write_report(const StudyReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ostringstream os;
    os << "participant_id,level,n_trials,failed_epidural_rate,success_rate,dural_puncture_rate,"
          "mean_abs_error_mm,mean_probe_count,mean_probe_depth_mm,mean_probe_rate_hz\n";
    for (const auto& p : rep.participants) {
      os << csv::join({p.id, std::to_string(p.level), std::to_string(p.n_trials),
                       csv::format_number(p.failed_epidural_rate), csv::format_number(p.success_rate),
                       csv::format_number(p.dural_puncture_rate), csv::format_number(p.mean_abs_error),
                       csv::format_number(p.mean_probe_count), csv::format_optional(p.mean_probe_depth),
                       csv::format_optional(p.mean_probe_rate)})
         << '\n';
    }
    write_file_atomic(dir / "participants.csv", os.str());
  }
  write_file_atomic(dir / "outcome_rates_by_level.csv",
                    summary_csv({&rep.outcome_rates_fe, &rep.outcome_rates_success, &rep.outcome_rates_dp}));
  write_file_atomic(dir / "error_types_by_level.csv", summary_csv(ptrs(rep.error_types)));
  write_file_atomic(dir / "abs_error_by_level.csv", summary_csv({&rep.abs_error}));
  write_file_atomic(dir / "probes_by_level.csv", summary_csv(ptrs(rep.probes_by_level)));
  write_file_atomic(dir / "probes_by_outcome.csv", summary_csv(ptrs(rep.probes_by_outcome)));
  write_file_atomic(dir / "layer_density_by_level.csv", summary_csv(ptrs(rep.layer_density)));
  write_file_atomic(dir / "layer_velocity_by_level.csv", summary_csv(ptrs(rep.layer_velocity)));
  write_file_atomic(dir / "vas.csv", summary_csv(ptrs(rep.vas)));

  // Every test in one table.
  std::vector<std::pair<std::string, const Comparison*>> tested;
  tested.emplace_back("by_level", &rep.outcome_rates_success);
  for (const auto& c : rep.error_types) tested.emplace_back("within_level", &c);
  tested.emplace_back("by_level", &rep.abs_error);
  for (const auto& c : rep.probes_by_level) tested.emplace_back("by_level", &c);
  for (const auto& c : rep.probes_by_outcome) tested.emplace_back("by_outcome", &c);
  {
    std::ostringstream os;
    os << "metric,grouping,test,statistic,df,p_value,exact,n,post_hoc\n";
    for (const auto& [grouping, c] : tested) {
      if (!c->test) continue;
      const auto& t = *c->test;
      std::string ph;
      for (const auto& pc : t.post_hoc) {
        if (!ph.empty()) ph += ';';
        ph += c->groups[pc.group_a].group + "-" + c->groups[pc.group_b].group + "=" +
              csv::format_number(pc.adjusted_p);
      }
      os << csv::join({c->metric, grouping, t.test, csv::format_number(t.statistic),
                       csv::format_number(t.df), csv::format_number(t.p_value),
                       t.exact ? "true" : "false", std::to_string(t.n_effective), ph})
         << '\n';
    }
    write_file_atomic(dir / "tests.csv", os.str());
  }

  ojson j;
  j["v"] = 1;
  ojson parts = ojson::array();
  for (const auto& p : rep.participants) {
    parts.push_back({{"participant_id", p.id},
                     {"level", p.level},
                     {"n_trials", p.n_trials},
                     {"failed_epidural_rate", p.failed_epidural_rate},
                     {"success_rate", p.success_rate},
                     {"dural_puncture_rate", p.dural_puncture_rate},
                     {"mean_abs_error_mm", p.mean_abs_error},
                     {"mean_probe_count", p.mean_probe_count},
                     {"mean_probe_depth_mm", opt_json(p.mean_probe_depth)},
                     {"mean_probe_rate_hz", opt_json(p.mean_probe_rate)}});
  }
  j["participants"] = std::move(parts);
  j["unmatched_participants"] = rep.unmatched;
  j["outcome_rates_by_level"] = ojson::array({comparison_json(rep.outcome_rates_fe),
                                              comparison_json(rep.outcome_rates_success),
                                              comparison_json(rep.outcome_rates_dp)});
  auto arr = [](const std::vector<Comparison>& v) {
    ojson a = ojson::array();
    for (const auto& c : v) a.push_back(comparison_json(c));
    return a;
  };
  j["error_types_by_level"] = arr(rep.error_types);
  j["abs_error_by_level"] = comparison_json(rep.abs_error);
  j["probes_by_level"] = arr(rep.probes_by_level);
  j["probes_by_outcome"] = arr(rep.probes_by_outcome);
  j["layer_density_by_level"] = arr(rep.layer_density);
  j["layer_velocity_by_level"] = arr(rep.layer_velocity);
  j["vas"] = arr(rep.vas);
  write_file_atomic(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace episim
