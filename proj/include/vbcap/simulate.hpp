#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vbcap/model.hpp"
#include "vbcap/signals.hpp"

namespace vbcap {

enum class PolicyKind {
  charge_slack_greedy,
  discharge_slack_greedy,
  nominal_proportional,
  target_profile,
};

enum class SimMode { strict, clip };

enum class ProfileKind { nominal, charge_equalized, discharge_equalized };

// Which equalized family target_profile steers toward.
enum class SteerKind { charge, discharge };

struct SimConfig {
  LoadClass lc;
  double lambda = 100.0;  // arrivals per time unit
  double dt = 1e-3;
  double warmup = 2.0;  // must be a multiple of 1/lambda and at least window
  PolicyKind policy = PolicyKind::charge_slack_greedy;
  SimMode mode = SimMode::strict;
  std::uint64_t seed = 1;
  ProfileKind initial_profile = ProfileKind::nominal;
  double initial_chi = 0.0;
  SteerKind steer_profile = SteerKind::charge;
  bool record_steps = true;
};

struct StepRecord {
  double t = 0.0;
  double w_target = 0.0;
  double w_achieved = 0.0;
  double chi = 0.0;
  double x_avg = 0.0;
  int n_active = 0;
  bool infeasible = false;
};

struct InfeasibleEvent {
  double t = 0.0;
  double shortfall = 0.0;  // signed, battery-power units (per average load)
};

enum class Verdict { tracked, failed };

struct SimResult {
  std::vector<StepRecord> records;
  std::vector<InfeasibleEvent> events;
  int deadline_failures = 0;
  double max_tracking_error = 0.0;
  Verdict verdict = Verdict::tracked;
  long loads_completed = 0;
  double energy_delivered = 0.0;
  double final_chi = 0.0;
  double final_x_avg = 0.0;

  std::string records_csv(const std::vector<std::pair<std::string, std::string>>&
                              header_echo) const;
  std::string events_csv() const;
};

// One active load as the allocation step sees it. Earlier arrival means
// larger age; ties in age break by index.
struct LoadView {
  double energy = 0.0;
  double age = 0.0;  // at the start of the step
};

struct PowerInterval {
  double p_min = 0.0;
  double p_max = 0.0;
};

// Power band keeping the load finishable: at most the power limit and the
// remaining need, at least the catch-up rate that leaves the rest coverable
// at full power. Throws if the need is already out of reach.
PowerInterval feasible_power_interval(const LoadClass& lc, double energy,
                                      double age, double dt);

struct AllocateOutcome {
  std::vector<double> powers;
  double effective_total = 0.0;
  bool clamped = false;          // target fell outside [sum p_min, sum p_max]
  bool hard_infeasible = false;  // some load cannot finish at all
};

// Water-filling: mandatory minima first, then surplus by policy priority.
// steer supplies the target energy-by-age curve for target_profile and is
// ignored by the other policies.
AllocateOutcome allocate_step(const std::vector<LoadView>& loads,
                              double aggregate_target, PolicyKind policy,
                              const LoadClass& lc, double dt,
                              const std::function<double(double)>& steer = {});

// Discrete-time fleet run: seeded on the initial profile, warmed up holding
// it, then tracking the trajectory. Fleet power target is
// lambda*T*(P0 + w(t)).
SimResult run(const SimConfig& cfg, const Trajectory& traj);

}  // namespace vbcap
