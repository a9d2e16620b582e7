#pragma once

// The episim subcommands as plain functions, so tests can drive them without
// a subprocess. Each returns the process exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace episim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // verification failed
inline constexpr int kExitInput = 2;    // bad input, nothing written

struct SimulateArgs {
  std::vector<std::string> profiles{"expert"};
  std::optional<double> mass;
  std::optional<int> trials;
  int participants = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct AnalyzeArgs {
  std::vector<std::string> inputs;  // glob patterns
  std::filesystem::path out;
  double prominence = 0.5;
  double separation = 0.05;
};

struct ReportArgs {
  std::filesystem::path metrics;
  std::vector<std::filesystem::path> profiles;
  std::filesystem::path out;
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  std::optional<std::filesystem::path> record_dir;
  std::optional<std::filesystem::path> static_dir;
};

struct ReplayArgs {
  std::vector<std::string> inputs;
  bool verify = false;
};

int run_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int run_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);
int run_report(const ReportArgs& args, std::ostream& out, std::ostream& err);
int run_serve(const ServeArgs& args, std::ostream& out, std::ostream& err);
int run_replay(const ReplayArgs& args, std::ostream& out, std::ostream& err);

// Sorted matches of the patterns; a pattern without wildcards names itself.
std::vector<std::filesystem::path> expand_globs(const std::vector<std::string>& patterns);

}  // namespace episim::cli
