#include "commands.hpp"

#include <glob.h>
#include <signal.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "episim/assessment.hpp"
#include "episim/metrics_table.hpp"
#include "episim/record_io.hpp"
#include "episim/server.hpp"
#include "episim/synthetic_agent.hpp"

namespace episim::cli {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::string participant_id(const std::string& profile, int index) {
  std::ostringstream os;
  os << profile << "_p" << std::setw(2) << std::setfill('0') << index + 1;
  return os.str();
}

// Synthetic experience matching the profile's intended level.
ParticipantProfile synthetic_profile(const std::string& profile, const std::string& id) {
  ParticipantProfile p;
  p.id = id;
  if (profile == "novice") {
    p.years_experience = 0.5;
    p.n_epidurals_estimate = 20;
    p.position = Position::Resident;
  } else if (profile == "intermediate") {
    p.years_experience = 2;
    p.n_epidurals_estimate = 150;
    p.position = Position::Resident;
  } else {
    p.years_experience = 10;
    p.n_epidurals_estimate = 1000;
    p.position = Position::Attending;
  }
  return p;
}

std::vector<ScheduledTrial> simulation_schedule(const SimulateArgs& args, std::uint64_t seed) {
  if (args.mass) {
    const auto n = static_cast<std::size_t>(args.trials.value_or(12));
    return std::vector<ScheduledTrial>(n, ScheduledTrial{TrialKind::Test, *args.mass});
  }
  SessionConfig cfg;
  cfg.rng_seed = seed;
  if (args.trials) {
    const int tests = std::max(0, *args.trials - cfg.n_familiarization);
    const int per_block = static_cast<int>(cfg.test_masses.size());
    cfg.blocks = std::max(1, (tests + per_block - 1) / per_block);
  }
  auto schedule = generate_schedule(cfg);
  if (args.trials) schedule.resize(std::min(schedule.size(), static_cast<std::size_t>(*args.trials)));
  return schedule;
}

}  // namespace

std::vector<std::filesystem::path> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::filesystem::path> out;
  for (const auto& pattern : patterns) {
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int run_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  if (args.participants < 1) {
    err << "simulate: --participants must be >= 1\n";
    return kExitInput;
  }
  if (args.trials && *args.trials < 1) {
    err << "simulate: --trials must be >= 1\n";
    return kExitInput;
  }
  std::vector<AgentProfile> profiles;
  for (const auto& name : args.profiles) {
    auto p = AgentProfile::named(name);
    if (!p) {
      err << "simulate: unknown profile '" << name << "' (novice, intermediate, expert)\n";
      return kExitInput;
    }
    profiles.push_back(*p);
  }
  try {
    if (args.mass) build_patient_model(*args.mass);  // validates the range
    std::filesystem::create_directories(args.out);
    for (const auto& profile : profiles) {
      std::array<std::size_t, 3> counts{};
      std::vector<ParticipantProfile> rows;
      for (int i = 0; i < args.participants; ++i) {
        const std::string pid = participant_id(profile.name, i);
        const std::uint64_t pseed = mix(mix(args.seed, hash_name(profile.name)), static_cast<std::uint64_t>(i));
        const auto schedule = simulation_schedule(args, pseed);
        for (std::size_t k = 0; k < schedule.size(); ++k) {
          const auto& s = schedule[k];
          Trial trial(static_cast<int>(k), s.kind, s.body_mass, s.kind == TrialKind::Familiarization, pid);
          const AgentRun run = run_synthetic_agent(profile, trial.model(), mix(pseed, k + 1));
          const TrialRecord rec = execute_run(run, trial);
          save_record(args.out / record_file_name(rec), rec);
          ++counts[static_cast<std::size_t>(rec.outcome.kind)];
        }
        rows.push_back(synthetic_profile(profile.name, pid));
      }
      std::ostringstream csv;
      write_profiles_csv(csv, rows);
      write_file_atomic(args.out / ("participants_" + profile.name + ".csv"), csv.str());
      out << profile.name << ": " << counts[0] + counts[1] + counts[2] << " trials, success "
          << counts[static_cast<std::size_t>(OutcomeKind::Success)] << ", failed_epidural "
          << counts[static_cast<std::size_t>(OutcomeKind::FailedEpidural)] << ", dural_puncture "
          << counts[static_cast<std::size_t>(OutcomeKind::DuralPuncture)] << '\n';
    }
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

int run_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  if (!(args.prominence > 0.0) || !(args.separation >= 0.0)) {
    err << "analyze: --prominence must be > 0 and --separation >= 0\n";
    return kExitInput;
  }
  const auto files = expand_globs(args.inputs);
  if (files.empty()) {
    err << "analyze: no record files match the input pattern\n";
    return kExitInput;
  }
  const PeakParams params{args.prominence, args.separation};
  std::vector<TrialMetrics> rows;
  try {
    for (const auto& f : files) rows.push_back(analyze_trial(load_record(f), params));
  } catch (const std::exception& e) {
    err << "analyze: " << e.what() << '\n';
    return kExitInput;
  }
  std::sort(rows.begin(), rows.end(), [](const TrialMetrics& a, const TrialMetrics& b) {
    return std::tie(a.participant_id, a.trial_index) < std::tie(b.participant_id, b.trial_index);
  });
  std::ostringstream csv;
  write_metrics_csv(csv, rows);
  try {
    if (args.out.has_parent_path()) std::filesystem::create_directories(args.out.parent_path());
    write_file_atomic(args.out, csv.str());
  } catch (const std::exception& e) {
    err << "analyze: " << e.what() << '\n';
    return kExitInput;
  }
  out << "analyzed " << rows.size() << " records -> " << args.out.string() << '\n';
  return kExitOk;
}

int run_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream min(args.metrics);
    if (!min) throw std::runtime_error("cannot open " + args.metrics.string());
    const auto metrics = read_metrics_csv(min);
    std::vector<ParticipantProfile> profiles;
    for (const auto& p : args.profiles) {
      std::ifstream pin(p);
      if (!pin) throw std::runtime_error("cannot open " + p.string());
      auto more = read_profiles_csv(pin);
      profiles.insert(profiles.end(), more.begin(), more.end());
    }
    const StudyReport rep = study_report(metrics, profiles, args.seed);
    write_report(rep, args.out);
    out << "success rate by level\n";
    for (const auto& g : rep.outcome_rates_success.groups) {
      out << "  " << g.group << "  n=" << g.n;
      if (g.mean) out << "  mean=" << *g.mean;
      out << '\n';
    }
    if (!rep.unmatched.empty()) {
      err << "report: " << rep.unmatched.size() << " participant(s) without a profile were skipped\n";
    }
  } catch (const std::exception& e) {
    err << "report: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

int run_serve(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  // Block the stop signals before any server thread exists so sigwait gets them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  ServerOptions opts;
  opts.address = args.address;
  opts.port = args.port;
  opts.record_dir = args.record_dir;
  opts.static_dir = args.static_dir;
  opts.log = [&err](const std::string& m) { err << "serve: " << m << std::endl; };
  try {
    Server server(opts);
    server.start();
    out << "listening on ws://" << args.address << ':' << server.port() << "/ws" << std::endl;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
    out << "stopped, " << server.records_written() << " records written" << std::endl;
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

int run_replay(const ReplayArgs& args, std::ostream& out, std::ostream& err) {
  const auto files = expand_globs(args.inputs);
  if (files.empty()) {
    err << "replay: no record files match the input\n";
    return kExitInput;
  }
  bool diverged = false;
  for (const auto& f : files) {
    try {
      const TrialRecord rec = load_record(f);
      if (args.verify) {
        if (auto diff = verify_replay(rec)) {
          out << f.string() << ": DIVERGED: " << *diff << '\n';
          diverged = true;
        } else {
          out << f.string() << ": ok\n";
        }
      } else {
        const TrialRecord again = replay(rec);
        out << f.string() << ": " << outcome_name(again.outcome.kind) << " at "
            << again.final_depth << " mm (" << again.samples.size() << " samples)\n";
      }
    } catch (const std::exception& e) {
      err << "replay: " << f.string() << ": " << e.what() << '\n';
      return kExitInput;
    }
  }
  return diverged ? kExitFailure : kExitOk;
}

}  // namespace episim::cli
