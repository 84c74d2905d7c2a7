#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vbcap/model.hpp"
#include "vbcap/signals.hpp"
#include "vbcap/simulate.hpp"

namespace vbcap {

// One run of the falsification suite: initial fleet state plus the signal
// thrown at it.
struct ProbeRun {
  std::string name;
  ProfileKind init = ProfileKind::nominal;
  double chi0 = 0.0;
  Trajectory traj;
};

// Worst-case members of the battery: full-rate excursions between the state
// limits with settling holds, plus a turn at the state the area condition
// flags as tightest. Degenerate rate components shrink the suite to the
// excursions that remain expressible.
std::vector<ProbeRun> adversarial_suite(const LoadClass& lc,
                                        const BatterySpec& spec, double dt);

// Runs the whole suite under one policy; tracked only if every run is.
struct SuiteOutcome {
  bool tracked = false;
  int runs = 0;
  int failed_runs = 0;
  std::string first_failed;
};
SuiteOutcome run_adversarial_suite(const LoadClass& lc, const BatterySpec& spec,
                                   const SimConfig& base_cfg);

struct EmpiricalFrontierConfig {
  LoadClass lc;
  PolicyKind policy = PolicyKind::charge_slack_greedy;
  double lambda = 100.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  int bisect_iters = 12;
  double w_floor = 0.02;  // smallest discharge rate worth probing
};

struct EmpiricalFrontierPoint {
  double w_bar = 0.0;
  double w_under = 0.0;
  bool tracked = false;  // false only if even the floor failed
};

// For each w_bar on a uniform grid, bisects for the largest normalized
// discharge rate whose adversarial suite still tracks. Columns are
// independent and run in parallel when enabled; results are ordered by
// grid index either way.
std::vector<EmpiricalFrontierPoint> empirical_frontier(
    const EmpiricalFrontierConfig& cfg, double c, int n_grid,
    bool parallel = true);

}  // namespace vbcap
