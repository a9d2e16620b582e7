#include "doctest.h"
#include "episim/kinematics.hpp"
#include "episim/synthetic_agent.hpp"

using namespace episim;

namespace {

TrialRecord run_once(const AgentProfile& p, double mass, std::uint64_t seed) {
  Trial trial(0, TrialKind::Test, mass, false, "agent");
  return execute_run(run_synthetic_agent(p, trial.model(), seed), trial);
}

}  // namespace

TEST_CASE("named profiles") {
  CHECK(AgentProfile::named("expert")->name == "expert");
  CHECK(AgentProfile::named("novice")->advance_speed > AgentProfile::named("expert")->advance_speed);
  CHECK_FALSE(AgentProfile::named("wizard").has_value());
  AgentProfile bad = AgentProfile::expert();
  bad.advance_speed = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("expert agent lands in the epidural space at 71 kg") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(run_once(AgentProfile::expert(), 71.0, seed).outcome.kind == OutcomeKind::Success);
  }
}

TEST_CASE("slow reaction overshoots into the dura") {
  AgentProfile p = AgentProfile::expert();
  const auto model = build_patient_model(71.0);
  p.stop.reaction_delay_ms = 8000.0;
  // Advance during the delay alone exceeds the window width.
  REQUIRE(p.advance_speed * 0.85 * 0.8 * p.stop.reaction_delay_ms / 1000.0 > model.epidural_window().width());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(run_once(p, 71.0, seed).outcome.kind == OutcomeKind::DuralPuncture);
  }
}

TEST_CASE("no probing means no detected probes") {
  AgentProfile p = AgentProfile::expert();
  p.probe_rate = 0.0;
  const auto rec = run_once(p, 71.0, 3);
  CHECK(analyze_trial(rec).probes.count == 0);
}

TEST_CASE("runs are deterministic in the seed") {
  const auto model = build_patient_model(85.0);
  const auto a = run_synthetic_agent(AgentProfile::novice(), model, 11);
  const auto b = run_synthetic_agent(AgentProfile::novice(), model, 11);
  const auto c = run_synthetic_agent(AgentProfile::novice(), model, 12);
  REQUIRE(a.stream.size() == b.stream.size());
  for (std::size_t i = 0; i < a.stream.size(); ++i) {
    REQUIRE(a.stream[i].p_touhy == b.stream[i].p_touhy);
    REQUIRE(a.stream[i].p_lor_raw == b.stream[i].p_lor_raw);
  }
  CHECK((a.stream.size() != c.stream.size() || a.stream.back().p_touhy != c.stream.back().p_touhy));
}

TEST_CASE("stream is on the 1 kHz grid") {
  const auto run = run_synthetic_agent(AgentProfile::intermediate(), build_patient_model(55.0), 5);
  REQUIRE(run.stream.size() > 10);
  for (std::size_t i = 0; i < run.stream.size(); ++i) {
    REQUIRE(run.stream[i].t == doctest::Approx(static_cast<double>(i) / 1000.0));
  }
}

TEST_CASE("expert probes are detected at the scripted rate") {
  const auto rec = run_once(AgentProfile::expert(), 71.0, 9);
  const auto m = analyze_trial(rec);
  REQUIRE(m.probes.mean_rate.has_value());
  CHECK(*m.probes.mean_rate == doctest::Approx(AgentProfile::expert().probe_rate).epsilon(0.1));
  REQUIRE(m.probes.mean_depth.has_value());
  CHECK(*m.probes.mean_depth == doctest::Approx(AgentProfile::expert().probe_depth).epsilon(0.1));
}
