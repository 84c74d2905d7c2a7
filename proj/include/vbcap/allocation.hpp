#pragma once

#include <string>
#include <vector>

#include "vbcap/model.hpp"

namespace vbcap {

// Fluid-limit energy allocation over load age: x(sigma) on a grid covering
// [0, window], piecewise linear between nodes.
class AllocationProfile {
 public:
  static AllocationProfile create(const LoadClass& lc, std::vector<double> ages,
                                  std::vector<double> values);

  const LoadClass& load() const { return lc_; }
  const std::vector<double>& ages() const { return ages_; }
  const std::vector<double>& values() const { return values_; }

  double value_at(double sigma) const;  // clamped linear interpolation

  std::string to_csv() const;  // sigma,x,x_upper,x_lower,charge_slack,discharge_slack

 private:
  AllocationProfile() = default;
  LoadClass lc_;
  std::vector<double> ages_;
  std::vector<double> values_;
};

inline constexpr int kDefaultGridIntervals = 2048;

// Uniform grid with the envelope breakpoints inserted.
std::vector<double> default_age_grid(const LoadClass& lc,
                                     int intervals = kDefaultGridIntervals);

// Mean stored energy relative to nominal: (1/T) integral of (x - P0 sigma).
double average_stored_energy(const AllocationProfile& profile);

// Flat-level profile clamp(level, lower, upper); equalizes charge slacks
// wherever neither envelope binds. Level found by bisection on the stored
// energy target.
AllocationProfile charge_slack_equalized(const LoadClass& lc,
                                         double chi_target);

// Deadline-anchored ramp clamp(E - P_bar(T - sigma - s), lower, upper);
// equalizes discharge slacks off the envelopes.
AllocationProfile discharge_slack_equalized(const LoadClass& lc,
                                            double chi_target);

enum class FluidPolicy {
  charge_greedy,     // surplus to the largest charge slack first
  discharge_greedy,  // withhold from the largest discharge slack first
  unbounded_split,   // lower envelope up to a split age, then full; needs
                     // an unbounded per-load power limit
};

struct FluidPolicyState {
  AllocationProfile profile;
  double chi = 0.0;
  double varsigma = 0.0;  // split age, meaningful under unbounded_split
};

FluidPolicyState initial_fluid_state(const LoadClass& lc, FluidPolicy policy,
                                     double chi0);

struct FluidStepResult {
  FluidPolicyState state;
  bool infeasible = false;
  double shortfall = 0.0;  // battery-power units when infeasible
};

// Advances the allocation by dt under exogenous battery power w_value:
// ages advance, arrivals enter at zero, loads past the window leave full
// (leaving short is flagged), then the policy spreads the aggregate power.
FluidStepResult fluid_step(const FluidPolicyState& state, double w_value,
                           double dt, FluidPolicy policy);

}  // namespace vbcap
