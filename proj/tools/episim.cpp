#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace episim::cli;
  CLI::App app{"Epidural needle insertion simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run synthetic-agent sessions and write trial records");
  simulate->add_option("--profile", sim.profiles, "novice, intermediate or expert (repeatable)")
      ->check(CLI::IsMember({"novice", "intermediate", "expert"}));
  simulate->add_option("--mass", sim.mass, "Run every trial as a test trial at this body mass (kg)");
  simulate->add_option("--trials", sim.trials, "Trials per participant");
  simulate->add_option("--participants", sim.participants, "Participants per profile");
  simulate->add_option("--seed", sim.seed, "Seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Compute per-trial metrics from records");
  analyze->add_option("--in", ana.inputs, "Record file glob (repeatable)")->required();
  analyze->add_option("--out", ana.out, "Metrics CSV")->required();
  analyze->add_option("--prominence", ana.prominence, "Minimum probe prominence (mm)");
  analyze->add_option("--separation", ana.separation, "Minimum probe separation (s)");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Group metrics by level and outcome and run the tests");
  report->add_option("--metrics", rep.metrics, "Metrics CSV")->required();
  report->add_option("--profiles", rep.profiles, "Participant profile CSV (repeatable)")->required();
  report->add_option("--out", rep.out, "Output directory")->required();
  report->add_option("--seed", rep.seed, "Bootstrap seed");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Host the websocket session service");
  serve->add_option("--address", srv.address, "Bind address");
  serve->add_option("--port", srv.port, "Port (0 picks a free one)");
  serve->add_option("--record-dir", srv.record_dir, "Record directory (default $EPISIM_RECORD_DIR)");
  serve->add_option("--static-dir", srv.static_dir, "Directory served over plain HTTP");

  ReplayArgs rpl;
  auto* replay = app.add_subcommand("replay", "Re-simulate trial records");
  replay->add_option("--in", rpl.inputs, "Record file or glob (repeatable)")->required();
  replay->add_flag("--verify", rpl.verify, "Exit nonzero on any bit-level divergence");

  CLI11_PARSE(app, argc, argv);

  if (*simulate) return run_simulate(sim, std::cout, std::cerr);
  if (*analyze) return run_analyze(ana, std::cout, std::cerr);
  if (*report) return run_report(rep, std::cout, std::cerr);
  if (*serve) return run_serve(srv, std::cout, std::cerr);
  return run_replay(rpl, std::cout, std::cerr);
}
