#pragma once

// Counters for the operations that dominate inference cost.  Passed around
// as an optional sink so benchmark runs can meter work without timing.

namespace sensorium {

struct OpCounter {
  long long evidence_updates = 0;      // per-hypothesis evidence evaluations
  long long neighbor_queries = 0;      // spatial lookups into object models
  long long rotation_compositions = 0; // quaternion products in scoring
  long long vote_integrations = 0;     // vote kernel accumulations

  void reset() { *this = OpCounter{}; }
};

}  // namespace sensorium
