#include "vbcap/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace vbcap {

namespace {

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// Age of the last instant the lower envelope is still zero.
double lower_rise_age(const LoadClass& lc) {
  if (!lc.bounded()) return lc.window;
  return (1.0 - lc.nominal_rate() / lc.power_limit) * lc.window;
}

void check_age(const LoadClass& lc, double sigma) {
  const double slop = 1e-9 * std::max(1.0, lc.window);
  if (sigma < -slop || sigma > lc.window + slop)
    throw std::domain_error("age outside [0, window]");
}

}  // namespace

LoadClass LoadClass::validated() const {
  if (!(std::isfinite(energy) && energy > 0.0))
    throw std::invalid_argument("load class: energy must be positive and finite");
  if (!(std::isfinite(window) && window > 0.0))
    throw std::invalid_argument("load class: window must be positive and finite");
  if (std::isnan(power_limit) || power_limit < nominal_rate())
    throw std::invalid_argument("load class: power limit is below the nominal rate energy/window");
  return *this;
}

BatterySpec BatterySpec::validated() const {
  if (!(std::isfinite(volume) && volume >= 0.0))
    throw std::invalid_argument("battery: volume must be finite and non-negative");
  if (!(std::isfinite(charge_rate) && charge_rate >= 0.0))
    throw std::invalid_argument("battery: charge rate must be finite and non-negative");
  if (!(std::isfinite(discharge_rate) && discharge_rate >= 0.0))
    throw std::invalid_argument("battery: discharge rate must be finite and non-negative");
  return *this;
}

DerivedCapacity derive_capacity(const LoadClass& lc) {
  lc.validated();
  const double p0 = lc.nominal_rate();
  if (!lc.bounded()) return {lc.energy, kUnbounded, p0};
  return {lc.energy * (1.0 - p0 / lc.power_limit), lc.power_limit - p0, p0};
}

BatterySpec max_battery(const LoadClass& lc) {
  const DerivedCapacity cap = derive_capacity(lc);
  return {cap.volume_max, cap.charge_rate_max, cap.discharge_rate_max};
}

NormalizedBattery normalize(const BatterySpec& spec, const LoadClass& lc) {
  if (!lc.bounded())
    throw std::domain_error("normalization needs a finite power limit");
  const DerivedCapacity cap = derive_capacity(lc);
  if (cap.volume_max <= 0.0 || cap.charge_rate_max <= 0.0)
    throw std::domain_error("normalization undefined: class has no flexibility (power limit equals the nominal rate)");
  return {spec.volume / cap.volume_max, spec.charge_rate / cap.charge_rate_max,
          spec.discharge_rate / cap.discharge_rate_max};
}

BatterySpec denormalize(const NormalizedBattery& nb, const LoadClass& lc) {
  if (!lc.bounded())
    throw std::domain_error("normalization needs a finite power limit");
  const DerivedCapacity cap = derive_capacity(lc);
  if (cap.volume_max <= 0.0 || cap.charge_rate_max <= 0.0)
    throw std::domain_error("normalization undefined: class has no flexibility (power limit equals the nominal rate)");
  return {nb.c * cap.volume_max, nb.w_bar * cap.charge_rate_max,
          nb.w_under * cap.discharge_rate_max};
}

double upper_envelope_extended(const LoadClass& lc, double sigma) {
  if (sigma <= 0.0) return 0.0;
  if (!lc.bounded()) return lc.energy;
  return std::min(lc.power_limit * sigma, lc.energy);
}

double lower_envelope_extended(const LoadClass& lc, double sigma) {
  // exact at the deadline regardless of roundoff in the slope form
  if (sigma >= lc.window) return lc.energy;
  if (!lc.bounded()) return 0.0;
  return clampd(lc.power_limit * (sigma - lower_rise_age(lc)), 0.0, lc.energy);
}

double upper_envelope(const LoadClass& lc, double sigma) {
  check_age(lc, sigma);
  return upper_envelope_extended(lc, sigma);
}

double lower_envelope(const LoadClass& lc, double sigma) {
  check_age(lc, sigma);
  return lower_envelope_extended(lc, sigma);
}

double nominal_energy(const LoadClass& lc, double sigma) {
  check_age(lc, sigma);
  return clampd(lc.nominal_rate() * sigma, 0.0, lc.energy);
}

EnvelopeBreakpoints envelope_breakpoints(const LoadClass& lc) {
  if (!lc.bounded()) return {0.0, lc.window};
  return {lc.energy / lc.power_limit, lower_rise_age(lc)};
}

double charge_slack(const LoadClass& lc, double x, double sigma) {
  check_age(lc, sigma);
  const double slop = 1e-9 * std::max(1.0, lc.energy);
  if (x < lower_envelope_extended(lc, sigma) - slop ||
      x > upper_envelope_extended(lc, sigma) + slop)
    throw std::domain_error("allocation outside the energy envelopes");
  if (!lc.bounded()) return 0.0;
  return (lc.energy - x) / lc.power_limit;
}

double discharge_slack(const LoadClass& lc, double x, double sigma) {
  return (lc.window - sigma) - charge_slack(lc, x, sigma);
}

namespace {

double traversal_time(double half, double chi, double span, double rate) {
  if (std::abs(chi) > half + 1e-12 * std::max(1.0, half))
    throw std::domain_error("battery state outside [-volume/2, volume/2]");
  if (rate == 0.0) return kUnbounded;
  return std::max(0.0, span / rate);
}

}  // namespace

double time_to_full(const BatterySpec& spec, double chi) {
  const double half = spec.volume / 2.0;
  return traversal_time(half, chi, half - chi, spec.charge_rate);
}

double time_to_empty(const BatterySpec& spec, double chi) {
  const double half = spec.volume / 2.0;
  return traversal_time(half, chi, half + chi, spec.discharge_rate);
}

}  // namespace vbcap
