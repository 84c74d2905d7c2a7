#pragma once

#include <cmath>
#include <limits>

// Core quantities of a deferrable-load fleet viewed as a battery: load-class
// parameters, the derived battery limits, energy envelopes over load age, and
// battery-state timing. Everything is a pure function of plain value types.

namespace vbcap {

// Distinguished value for a rate-unconstrained load class or charge rate.
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// One homogeneous class of deferrable loads: each job needs `energy` within
// `window` of its arrival and may draw between 0 and `power_limit` at any
// instant. power_limit may be kUnbounded.
struct LoadClass {
  double energy = 1.0;
  double window = 1.0;
  double power_limit = kUnbounded;

  double nominal_rate() const { return energy / window; }
  bool bounded() const { return std::isfinite(power_limit); }

  // Returns *this after checking energy > 0, window > 0 and
  // power_limit >= energy/window; throws std::invalid_argument otherwise.
  LoadClass validated() const;
};

// Componentwise limits of every battery the class can emulate.
// charge_rate_max is kUnbounded when the class is unbounded.
struct DerivedCapacity {
  double volume_max = 0.0;
  double charge_rate_max = 0.0;
  double discharge_rate_max = 0.0;
};

DerivedCapacity derive_capacity(const LoadClass& lc);

// An ideal battery: stored energy lives in [-volume/2, volume/2], input power
// in [-discharge_rate, charge_rate].
struct BatterySpec {
  double volume = 0.0;
  double charge_rate = 0.0;
  double discharge_rate = 0.0;

  // User-facing construction check: all fields finite and non-negative.
  // Internally produced batteries (max_battery of an unbounded class) may
  // carry charge_rate = kUnbounded and skip this.
  BatterySpec validated() const;
};

// The componentwise-largest emulatable battery.
BatterySpec max_battery(const LoadClass& lc);

// Battery parameters rescaled by the class limits; all in [0, 1] for any
// battery below max_battery.
struct NormalizedBattery {
  double c = 0.0;
  double w_bar = 0.0;
  double w_under = 0.0;
};

// Both throw std::domain_error when the class has no flexibility
// (volume_max or charge_rate_max is zero) or is unbounded.
NormalizedBattery normalize(const BatterySpec& spec, const LoadClass& lc);
BatterySpec denormalize(const NormalizedBattery& nb, const LoadClass& lc);

// Energy envelopes over load age. The checked versions accept sigma in
// [0, window] (within 1e-9 slop) and throw std::domain_error outside; the
// _extended versions are total, continuing with 0 before age 0 and with the
// full energy beyond the window, which is what shifted evaluations need.
double upper_envelope(const LoadClass& lc, double sigma);
double lower_envelope(const LoadClass& lc, double sigma);
double nominal_energy(const LoadClass& lc, double sigma);
double upper_envelope_extended(const LoadClass& lc, double sigma);
double lower_envelope_extended(const LoadClass& lc, double sigma);

// Ages where the envelopes change slope: the upper envelope saturates at
// upper_full, the lower envelope leaves zero at lower_rise. Quadrature grids
// include both so piecewise-linear integrals are exact.
struct EnvelopeBreakpoints {
  double upper_full;
  double lower_rise;
};
EnvelopeBreakpoints envelope_breakpoints(const LoadClass& lc);

// Slack times at a feasible (x, sigma) point: charge_slack is how long the
// load can sustain max power before filling, discharge_slack how long it can
// idle before the deadline forces max power. They sum to window - sigma.
// Throws std::domain_error when x lies outside the envelopes (1e-9 slop).
double charge_slack(const LoadClass& lc, double x, double sigma);
double discharge_slack(const LoadClass& lc, double x, double sigma);

// How long the battery can sustain its max charge (discharge) rate starting
// from state chi. A zero rate gives kUnbounded; chi outside
// [-volume/2, volume/2] throws std::domain_error.
double time_to_full(const BatterySpec& spec, double chi);
double time_to_empty(const BatterySpec& spec, double chi);

}  // namespace vbcap
