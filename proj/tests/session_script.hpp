#pragma once

// Scripted client for the session protocol: builds the frames a trainee
// station would send for a straight insertion to a target depth.

#include <string>
#include <vector>

#include "json.hpp"

namespace script {

using json = nlohmann::json;

inline std::string msg(const char* type) { return json{{"v", 1}, {"type", type}}.dump(); }

inline std::string position(double t, double p_touhy, double p_lor_raw) {
  return json{{"v", 1}, {"type", "position"}, {"t", t}, {"p_touhy", p_touhy}, {"p_lor_raw", p_lor_raw}}.dump();
}

// Updates at `rate_hz` from -1 mm to target at 10 mm/s, with the plunger
// following the needle.
inline std::vector<std::string> insertion(double target_mm, double rate_hz = 100.0) {
  std::vector<std::string> out;
  const double dt = 1.0 / rate_hz;
  double t = 0.0;
  for (double d = -1.0;; d += 10.0 * dt, t += dt) {
    const double depth = d > target_mm ? target_mm : d;
    out.push_back(position(t, depth, 120.0 + depth));
    if (depth == target_mm) break;
  }
  return out;
}

}  // namespace script
