#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "episim/assessment.hpp"
#include "episim/metrics_table.hpp"

using namespace episim;

namespace {

ParticipantProfile profile(std::optional<double> years, std::optional<double> epidurals, Position pos,
                           std::string id = "p") {
  ParticipantProfile p;
  p.id = std::move(id);
  p.years_experience = years;
  p.n_epidurals_estimate = epidurals;
  p.position = pos;
  return p;
}

TrialMetrics metric(std::string pid, int index, OutcomeKind outcome, double abs_error,
                    std::size_t probes, TrialKind kind = TrialKind::Test) {
  TrialMetrics m;
  m.participant_id = std::move(pid);
  m.trial_index = index;
  m.kind = kind;
  m.body_mass = 71.0;
  m.outcome = outcome;
  m.final_depth = 50.0;
  m.error = {outcome == OutcomeKind::FailedEpidural ? -abs_error : abs_error, abs_error};
  m.probes.count = probes;
  if (probes > 0) m.probes.mean_depth = 1.0 + 0.1 * static_cast<double>(probes);
  if (probes > 1) m.probes.mean_rate = 2.0;
  m.probes.per_layer_density[layer_slot(Tissue::LigamentumFlavum)] = 0.5;
  m.velocities[layer_slot(Tissue::Skin)] = 3.0;
  return m;
}

}  // namespace

TEST_CASE("level assignment rows") {
  CHECK(assign_level(profile(0.5, 30, Position::Resident)) == 1);
  CHECK(assign_level(profile(2, 100, Position::Unspecified)) == 2);
  CHECK(assign_level(profile(10, 1000, Position::Attending)) == 3);
  CHECK(assign_level(profile(4, 100, Position::Attending)) == 3);
  CHECK(assign_level(profile(2, 30, Position::Resident)) == 1);
  CHECK(assign_level(profile(1, 60, Position::Unspecified)) == 2);  // 1.5 rounds up
}

TEST_CASE("level bin edges") {
  CHECK(assign_level(profile(1.0, std::nullopt, Position::Unspecified)) == 1);
  CHECK(assign_level(profile(1.01, std::nullopt, Position::Unspecified)) == 2);
  CHECK(assign_level(profile(3.0, std::nullopt, Position::Unspecified)) == 2);
  CHECK(assign_level(profile(3.5, std::nullopt, Position::Unspecified)) == 3);
  CHECK(assign_level(profile(std::nullopt, 50, Position::Unspecified)) == 1);
  CHECK(assign_level(profile(std::nullopt, 51, Position::Unspecified)) == 2);
  CHECK(assign_level(profile(std::nullopt, 300, Position::Unspecified)) == 2);
  CHECK(assign_level(profile(std::nullopt, 301, Position::Unspecified)) == 3);
  CHECK(assign_level(profile(std::nullopt, std::nullopt, Position::Attending)) == 3);
}

TEST_CASE("level assignment errors") {
  CHECK_THROWS_AS(assign_level(profile(std::nullopt, std::nullopt, Position::Unspecified)), ValidationError);
  CHECK_THROWS_AS(assign_level(profile(-1, 10, Position::Resident)), ValidationError);
  auto p = profile(1, 10, Position::Resident);
  p.vas_responses["realism"] = 120;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("level is monotone in each category") {
  const std::vector<std::optional<double>> years{std::nullopt, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0};
  const std::vector<std::optional<double>> epi{std::nullopt, 0.0, 50.0, 51.0, 300.0, 400.0};
  const std::vector<Position> pos{Position::Unspecified, Position::Resident, Position::Attending};
  auto level = [](std::optional<double> y, std::optional<double> e, Position p) -> std::optional<int> {
    if (!y && !e && p == Position::Unspecified) return std::nullopt;
    return assign_level(profile(y, e, p));
  };
  for (std::size_t i = 1; i + 1 < years.size(); ++i) {
    for (const auto& e : epi) {
      for (auto p : pos) {
        const auto a = level(years[i], e, p), b = level(years[i + 1], e, p);
        if (a && b) CHECK(*a <= *b);
      }
    }
  }
  for (const auto& y : years) {
    for (std::size_t i = 1; i + 1 < epi.size(); ++i) {
      for (auto p : pos) {
        const auto a = level(y, epi[i], p), b = level(y, epi[i + 1], p);
        if (a && b) CHECK(*a <= *b);
      }
    }
  }
}

TEST_CASE("profile CSV round trip") {
  auto a = profile(0.5, 30, Position::Resident, "a");
  a.vas_responses["realism"] = 70;
  auto b = profile(std::nullopt, 800, Position::Attending, "b");
  b.vas_responses["usefulness"] = 40.5;
  std::stringstream ss;
  write_profiles_csv(ss, {a, b});
  const auto back = read_profiles_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].years_experience == 0.5);
  CHECK(back[0].vas_responses.at("realism") == 70.0);
  CHECK(back[0].vas_responses.count("usefulness") == 0);
  CHECK_FALSE(back[1].years_experience.has_value());
  CHECK(back[1].position == Position::Attending);
  CHECK(back[1].vas_responses.at("usefulness") == 40.5);

  std::istringstream dup("participant_id,years_experience,n_epidurals_estimate,position\nx,1,1,resident\nx,1,1,resident\n");
  CHECK_THROWS_AS(read_profiles_csv(dup), ValidationError);
  std::istringstream bad_pos("participant_id,years_experience,n_epidurals_estimate,position\nx,1,1,chief\n");
  CHECK_THROWS_AS(read_profiles_csv(bad_pos), ValidationError);
}

TEST_CASE("VAS grouping splits at 500 epidurals") {
  auto a = profile(1, 100, Position::Resident, "a");
  a.vas_responses["realism"] = 60;
  auto b = profile(1, 499, Position::Resident, "b");
  b.vas_responses["realism"] = 80;
  auto c = profile(5, 500, Position::Attending, "c");
  c.vas_responses["realism"] = 30;
  auto d = profile(5, 900, Position::Attending, "d");  // no responses
  const auto rep = vas_report({a, b, c, d});
  REQUIRE(rep.size() == 1);
  REQUIRE(rep[0].groups.size() == 2);
  CHECK(rep[0].groups[0].group == "inexperienced");
  CHECK(rep[0].groups[0].n == 2);
  CHECK(*rep[0].groups[0].mean == doctest::Approx(70.0));
  CHECK(rep[0].groups[1].n == 1);
  CHECK(*rep[0].groups[1].mean == doctest::Approx(30.0));
}

TEST_CASE("study report groups test trials by level") {
  const std::vector<ParticipantProfile> profiles{profile(0.5, 10, Position::Resident, "n1"),
                                                 profile(0.5, 10, Position::Resident, "n2"),
                                                 profile(10, 1000, Position::Attending, "e1"),
                                                 profile(10, 1000, Position::Attending, "e2")};
  std::vector<TrialMetrics> m;
  // Familiarization trials are ignored.
  m.push_back(metric("n1", 0, OutcomeKind::Success, 0, 5, TrialKind::Familiarization));
  m.push_back(metric("n1", 3, OutcomeKind::FailedEpidural, 4, 3));
  m.push_back(metric("n1", 4, OutcomeKind::DuralPuncture, 2, 2));
  m.push_back(metric("n2", 3, OutcomeKind::Success, 0, 6));
  m.push_back(metric("n2", 4, OutcomeKind::FailedEpidural, 6, 1));
  m.push_back(metric("e1", 3, OutcomeKind::Success, 0, 9));
  m.push_back(metric("e2", 3, OutcomeKind::Success, 0, 8));
  m.push_back(metric("stranger", 3, OutcomeKind::Success, 0, 8));

  const auto rep = study_report(m, profiles, 1);
  REQUIRE(rep.participants.size() == 4);
  CHECK(rep.unmatched == std::vector<std::string>{"stranger"});
  const auto& n1 = rep.participants[2];  // ordered by id: e1, e2, n1, n2
  CHECK(n1.id == "n1");
  CHECK(n1.n_trials == 2);
  CHECK(n1.failed_epidural_rate == 0.5);
  CHECK(n1.dural_puncture_rate == 0.5);
  CHECK(n1.mean_abs_error == 3.0);

  const auto& succ = rep.outcome_rates_success;
  REQUIRE(succ.groups.size() == 3);
  CHECK(succ.groups[0].n == 2);
  CHECK(*succ.groups[0].mean == doctest::Approx(0.25));
  CHECK(succ.groups[1].n == 0);
  CHECK_FALSE(succ.groups[1].mean.has_value());
  CHECK(*succ.groups[2].mean == 1.0);
  REQUIRE(succ.test.has_value());
  CHECK(succ.test->test == "kruskal_wallis");
  CHECK(succ.test->df == 1.0);

  REQUIRE(rep.error_types.size() == 3);
  REQUIRE(rep.error_types[0].test.has_value());
  CHECK(rep.error_types[0].test->test == "wilcoxon_signed_rank");
  CHECK_FALSE(rep.error_types[1].test.has_value());

  REQUIRE(rep.probes_by_outcome.size() == 3);
  CHECK(rep.probes_by_outcome[0].groups[1].group == "success");
  REQUIRE(rep.layer_density.size() == kModelTissues.size());
  CHECK(rep.layer_density[layer_slot(Tissue::LigamentumFlavum)].groups[0].mean == 0.5);
}

TEST_CASE("report files are written and deterministic") {
  const std::vector<ParticipantProfile> profiles{profile(0.5, 10, Position::Resident, "n1"),
                                                 profile(10, 1000, Position::Attending, "e1")};
  std::vector<TrialMetrics> m{metric("n1", 3, OutcomeKind::FailedEpidural, 4, 3),
                              metric("e1", 3, OutcomeKind::Success, 0, 9)};
  const auto dir = std::filesystem::temp_directory_path() / "episim_report_test";
  std::filesystem::remove_all(dir);
  write_report(study_report(m, profiles, 5), dir / "a");
  write_report(study_report(m, profiles, 5), dir / "b");
  for (const char* f : {"participants.csv", "outcome_rates_by_level.csv", "error_types_by_level.csv",
                        "abs_error_by_level.csv", "probes_by_level.csv", "probes_by_outcome.csv",
                        "layer_density_by_level.csv", "layer_velocity_by_level.csv", "vas.csv",
                        "tests.csv", "summary.json"}) {
    CAPTURE(f);
    std::ifstream a(dir / "a" / f), b(dir / "b" / f);
    REQUIRE(a.good());
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  std::ifstream head(dir / "a" / "outcome_rates_by_level.csv");
  std::string line;
  std::getline(head, line);
  CHECK(line == "metric,group,n,mean,ci_lo,ci_hi");
  std::filesystem::remove_all(dir);
}

TEST_CASE("metrics CSV round trip") {
  std::vector<TrialMetrics> rows{metric("a", 3, OutcomeKind::DuralPuncture, 1.25, 4),
                                 metric("b", 5, OutcomeKind::Success, 0, 0)};
  std::stringstream ss;
  write_metrics_csv(ss, rows);
  const auto back = read_metrics_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].participant_id == "a");
  CHECK(back[0].outcome == OutcomeKind::DuralPuncture);
  CHECK(back[0].error.absolute_mm == 1.25);
  CHECK(back[0].probes.count == 4);
  CHECK(back[0].probes.mean_depth == doctest::Approx(1.4));
  CHECK_FALSE(back[1].probes.mean_depth.has_value());
  CHECK(back[1].velocities[layer_slot(Tissue::Skin)] == 3.0);
  CHECK_FALSE(back[1].velocities[layer_slot(Tissue::Fat)].has_value());
  std::string header;
  std::stringstream again;
  write_metrics_csv(again, rows);
  std::getline(again, header);
  CHECK(header.rfind("participant_id,trial_index,kind,body_mass_kg,outcome,", 0) == 0);
}
