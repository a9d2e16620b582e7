#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "episim/record_io.hpp"
#include "json.hpp"

using namespace episim;
using namespace episim::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("episim_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

int run_binary(const std::string& args) {
  const char* bin = std::getenv("EPISIM_BIN");
  REQUIRE(bin != nullptr);
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate writes one deterministic record per trial") {
  const auto dir = fresh_dir("simulate");
  std::ostringstream out, err;
  SimulateArgs args;
  args.profiles = {"expert"};
  args.seed = 1;
  args.trials = 12;
  args.out = dir / "a";
  REQUIRE(run_simulate(args, out, err) == kExitOk);
  args.out = dir / "b";
  REQUIRE(run_simulate(args, out, err) == kExitOk);
  CHECK(count_files(dir / "a", ".jsonl") == 12);
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
  }
  CHECK(fs::exists(dir / "a" / "participants_expert.csv"));
  fs::remove_all(dir);
}

TEST_CASE("simulate at a fixed mass runs test trials only") {
  const auto dir = fresh_dir("mass");
  std::ostringstream out, err;
  SimulateArgs args;
  args.mass = 85.0;
  args.trials = 3;
  args.out = dir;
  REQUIRE(run_simulate(args, out, err) == kExitOk);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".jsonl") continue;
    const auto rec = load_record(e.path());
    CHECK(rec.kind == TrialKind::Test);
    CHECK(rec.body_mass == 85.0);
  }
  args.mass = 10.0;
  CHECK(run_simulate(args, out, err) == kExitInput);
  args.mass.reset();
  args.profiles = {"wizard"};
  CHECK(run_simulate(args, out, err) == kExitInput);
  fs::remove_all(dir);
}

TEST_CASE("analyze on an empty glob fails without writing") {
  const auto dir = fresh_dir("empty");
  std::ostringstream out, err;
  AnalyzeArgs args;
  args.inputs = {(dir / "*.jsonl").string()};
  args.out = dir / "metrics.csv";
  CHECK(run_analyze(args, out, err) == kExitInput);
  CHECK_FALSE(fs::exists(args.out));
  CHECK(run_binary("analyze --in '" + (dir / "*.jsonl").string() + "' --out " + args.out.string()) ==
        kExitInput);
  CHECK_FALSE(fs::exists(args.out));
  fs::remove_all(dir);
}

TEST_CASE("simulate, analyze and report across three profiles") {
  const auto dir = fresh_dir("pipeline");
  std::ostringstream out, err;
  SimulateArgs sim;
  sim.profiles = {"novice", "intermediate", "expert"};
  sim.participants = 2;
  sim.seed = 3;
  sim.out = dir / "records";
  REQUIRE(run_simulate(sim, out, err) == kExitOk);

  AnalyzeArgs ana;
  ana.inputs = {(dir / "records" / "*.jsonl").string()};
  ana.out = dir / "metrics.csv";
  REQUIRE(run_analyze(ana, out, err) == kExitOk);

  ReportArgs rep;
  rep.metrics = ana.out;
  for (const char* p : {"novice", "intermediate", "expert"}) {
    rep.profiles.push_back(dir / "records" / ("participants_" + std::string(p) + ".csv"));
  }
  rep.out = dir / "report";
  REQUIRE(run_report(rep, out, err) == kExitOk);

  const auto summary = nlohmann::json::parse(slurp(dir / "report" / "summary.json"));
  const auto& groups = summary["outcome_rates_by_level"][1]["groups"];
  REQUIRE(groups.size() == 3);
  CHECK(groups[0]["group"] == "L1");
  CHECK(groups[2]["mean"].get<double>() >= groups[0]["mean"].get<double>());

  ReplayArgs rpl;
  rpl.inputs = {(dir / "records" / "*.jsonl").string()};
  rpl.verify = true;
  CHECK(run_replay(rpl, out, err) == kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("replay --verify flags a tampered record") {
  const auto dir = fresh_dir("tamper");
  std::ostringstream out, err;
  SimulateArgs sim;
  sim.trials = 1;
  sim.out = dir;
  REQUIRE(run_simulate(sim, out, err) == kExitOk);
  const auto path = dir / "expert_p01_t00.jsonl";
  auto rec = load_record(path);
  rec.samples[rec.samples.size() / 2].f_lor += 1e-9;
  save_record(path, rec);
  ReplayArgs rpl;
  rpl.inputs = {path.string()};
  rpl.verify = true;
  std::ostringstream vout;
  CHECK(run_replay(rpl, vout, err) == kExitFailure);
  CHECK(vout.str().find("DIVERGED") != std::string::npos);
  CHECK(run_binary("replay --verify --in " + path.string()) == kExitFailure);
  rpl.verify = false;
  CHECK(run_replay(rpl, out, err) == kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("binary rejects bad arguments") {
  CHECK(run_binary("") != 0);
  CHECK(run_binary("simulate --profile wizard --out /tmp/x") != 0);
  CHECK(run_binary("replay") != 0);
}
