#pragma once

#include <optional>
#include <vector>

#include "vbcap/allocation.hpp"
#include "vbcap/model.hpp"

namespace vbcap {

enum class RegionReason {
  ok,
  wbar_below_1_minus_c,
  wunder_below_1_minus_c,
  sum_below_c,
};

struct RegionFlag {
  bool in_region_s = false;
  RegionReason reason = RegionReason::ok;
};

// The parameter region where the closed-form trade-off condition applies:
// w_bar >= 1-c, w_under >= 1-c, w_bar + w_under >= c.
RegionFlag region_check(const NormalizedBattery& nb);

enum class TradeoffVerdict {
  satisfies_necessary,
  violates,
  outside_region,
};

// Closed-form necessary condition for realizability in normalized units:
// (w_bar + w_under - c)^2 <= 4 w_bar w_under (1 - c), valid on the region
// above. Off the region callers should fall back to the area scan.
TradeoffVerdict tradeoff_feasible(const NormalizedBattery& nb);

// Normalized overlap-area check. The battery must leave enough room between
// the post-charge and pre-discharge critical profiles; the worst case over
// the admissible state interval is compared against the budget 1 - c.
struct AreaCheck {
  double chi_star = 0.0;   // unconstrained maximizer (w_under - w_bar)/2
  double sup_a = 0.0;      // worst normalized area over interval_lo..hi
  double budget = 0.0;     // 1 - c
  bool satisfied = false;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  bool interval_empty = false;
};
AreaCheck normalized_area_check(const NormalizedBattery& nb);

// Largest w_under in [0,1] that still passes the area check at (c, w_bar),
// found by bisection. nullopt only if even w_under = 0 fails, which cannot
// happen for valid inputs.
std::optional<double> max_wunder_on_frontier(double c, double w_bar);

struct FrontierSample {
  double w_bar = 0.0;
  double w_under = 0.0;
};
// max_wunder_on_frontier swept over a uniform w_bar grid of n_points.
std::vector<FrontierSample> frontier_curve(double c, int n_points,
                                           bool parallel = true);

// Worst-case state profiles: z_bar is the least energy an age-sigma load can
// hold if the fleet is to end fully charged after a max-rate charge stretch
// (it can climb at most at the power limit); z_under the most it can hold if
// the fleet is to end empty after a max-rate discharge stretch (it cannot
// shed energy at all). Unconstrained sides come back as -infinity / +energy.
struct CriticalProfiles {
  double z_bar = 0.0;
  double z_under = 0.0;
};
CriticalProfiles critical_profiles(const LoadClass& lc, const BatterySpec& spec,
                                   double chi, double sigma);

struct DeficiencyReport {
  double integral_delta_bar = 0.0;    // shortfall below z_bar, integrated
  double integral_delta_under = 0.0;  // excess above z_under, integrated
  double budget = 0.0;                // T (C_max - C) / 2 per side
  bool feasible = false;
};
// Exact piecewise-linear integration on the profile grid refined by the
// critical-profile kinks.
DeficiencyReport deficiency_report(const LoadClass& lc, const BatterySpec& spec,
                                   double chi, const AllocationProfile& alloc);

struct AreaConditionResult {
  bool holds = false;
  double max_area = 0.0;
  double budget = 0.0;      // (C_max - C) T
  double witness_chi = 0.0; // state attaining max_area
};
// Absolute-units necessary condition for spec <= phi_max (throws otherwise).
// Unbounded load classes pass unconditionally: every spec within phi_max is
// realizable there, so the overlap argument has nothing to exclude.
AreaConditionResult area_condition_holds(const LoadClass& lc,
                                         const BatterySpec& spec);

}  // namespace vbcap
