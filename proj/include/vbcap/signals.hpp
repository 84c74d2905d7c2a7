#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vbcap/model.hpp"

namespace vbcap {

// Uniformly sampled battery power signal, zero-order hold: w(t) = samples[i]
// on [i dt, (i+1) dt). The running integral uses left Riemann sums so the
// simulator and the membership test agree exactly.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> samples;

  double duration() const { return dt * static_cast<double>(samples.size()); }
};

Trajectory concat(const Trajectory& a, const Trajectory& b);  // same dt only

enum class ViolationKind { none, rate_high, rate_low, volume_high, volume_low };

struct MembershipResult {
  bool member = false;
  ViolationKind kind = ViolationKind::none;
  double t = 0.0;  // first violation time
};

// Checks rate bounds at each sample and the running integral chi against
// [-C/2, C/2] at each sample end, starting from chi0.
MembershipResult membership_check(const Trajectory& traj,
                                  const BatterySpec& spec, double chi0 = 0.0);

// Rate clamp followed by a saturating integrator on chi; output always
// passes membership_check and is a fixed point of this map.
Trajectory project_to_battery(const Trajectory& raw, const BatterySpec& spec,
                              double chi0 = 0.0);

enum class ProbePattern {
  charge_full,            // +W_bar until chi = C/2
  discharge_empty,        // -W_under until chi = -C/2
  charge_then_discharge,  // to full, then a full swing down
  discharge_then_charge,
};

// Legs of (rate, duration) sampled at dt; the last sample of each leg is
// scaled so the leg integral is exact, not rounded to dt. Zero-duration legs
// are skipped.
Trajectory piecewise_constant(
    const std::vector<std::pair<double, double>>& rate_duration, double dt);

// Extremal constant-rate excursions built on piecewise_constant.
Trajectory extremal_probe(const BatterySpec& spec, ProbePattern pattern,
                          double dt, double chi0 = 0.0);

Trajectory constant_signal(double level, double duration, double dt);

// Leads by a quarter period so the running integral is zero-centered with
// peak amplitude*period/4.
Trajectory square_wave(double amplitude, double period, double duration,
                       double dt);

Trajectory random_walk(std::uint64_t seed, double step_sd, double duration,
                       double dt);

std::string trajectory_to_csv(const Trajectory& traj);  // t,w
Trajectory trajectory_from_csv(const std::string& text);

}  // namespace vbcap
