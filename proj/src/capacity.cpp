#include "vbcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vbcap/numeric.hpp"

namespace vbcap {

namespace {

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

RegionFlag region_check(const NormalizedBattery& nb) {
  if (nb.w_bar < 1.0 - nb.c) return {false, RegionReason::wbar_below_1_minus_c};
  if (nb.w_under < 1.0 - nb.c)
    return {false, RegionReason::wunder_below_1_minus_c};
  if (nb.w_bar + nb.w_under < nb.c) return {false, RegionReason::sum_below_c};
  return {true, RegionReason::ok};
}

TradeoffVerdict tradeoff_feasible(const NormalizedBattery& nb) {
  if (!region_check(nb).in_region_s) return TradeoffVerdict::outside_region;
  const double lhs = (nb.w_bar + nb.w_under - nb.c) * (nb.w_bar + nb.w_under - nb.c);
  const double rhs = 4.0 * nb.w_bar * nb.w_under * (1.0 - nb.c);
  return lhs <= rhs ? TradeoffVerdict::satisfies_necessary
                    : TradeoffVerdict::violates;
}

AreaCheck normalized_area_check(const NormalizedBattery& nb) {
  const double c = nb.c, wb = nb.w_bar, wu = nb.w_under;
  AreaCheck out;
  out.budget = 1.0 - c;
  out.chi_star = (wu - wb) / 2.0;
  out.interval_lo = std::max(-c / 2.0, c / 2.0 - wb);
  out.interval_hi = std::min(c / 2.0, wu - c / 2.0);
  out.interval_empty = out.interval_lo > out.interval_hi;

  // With a zero rate the corresponding excursion cannot be requested at all,
  // so there is no overlap to bound.
  if (wb == 0.0 || wu == 0.0 || out.interval_empty) {
    out.sup_a = 0.0;
    out.satisfied = true;
    return out;
  }

  auto area = [&](double chi) {
    const double b = 1.0 - (c / 2.0 + chi) / wu;
    const double h = 1.0 - (c / 2.0 - chi) / wb;
    return std::max(0.0, b) * std::max(0.0, h);
  };

  double sup = std::max(area(out.interval_lo), area(out.interval_hi));
  sup = std::max(sup, area(clampd(out.chi_star, out.interval_lo, out.interval_hi)));
  const double span = out.interval_hi - out.interval_lo;
  for (int i = 1; i < 1024; ++i) {
    const double chi = out.interval_lo + span * (static_cast<double>(i) / 1024.0);
    sup = std::max(sup, area(chi));
  }
  out.sup_a = sup;
  // Exact comparison: the boundary grazes the budget quadratically, so any
  // additive slack here would shift the c=1 frontier by its square root.
  out.satisfied = sup <= out.budget;
  return out;
}

std::optional<double> max_wunder_on_frontier(double c, double w_bar) {
  if (!(c >= 0.0 && c <= 1.0 && w_bar >= 0.0 && w_bar <= 1.0))
    throw std::invalid_argument("normalized inputs must lie in [0, 1]");
  auto passes = [&](double wu) {
    return normalized_area_check({c, w_bar, wu}).satisfied;
  };
  if (passes(1.0)) return 1.0;
  if (!passes(0.0)) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60 && hi - lo > 2.5e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::vector<FrontierSample> frontier_curve(double c, int n_points,
                                           bool parallel) {
  if (n_points < 2) throw std::invalid_argument("need at least 2 grid points");
  std::vector<FrontierSample> out(static_cast<size_t>(n_points));
#if defined(VBCAP_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int i = 0; i < n_points; ++i) {
    const double wb = static_cast<double>(i) / static_cast<double>(n_points - 1);
    out[static_cast<size_t>(i)] = {wb, max_wunder_on_frontier(c, wb).value_or(0.0)};
  }
  (void)parallel;
  return out;
}

CriticalProfiles critical_profiles(const LoadClass& lc, const BatterySpec& spec,
                                   double chi, double sigma) {
  const double half = spec.volume / 2.0;
  if (std::abs(chi) > half + 1e-12 * std::max(1.0, half))
    throw std::domain_error("battery state outside [-volume/2, volume/2]");
  const double tc = time_to_full(spec, chi);
  const double td = time_to_empty(spec, chi);
  CriticalProfiles out;
  if (tc == 0.0) {
    out.z_bar = upper_envelope_extended(lc, sigma);
  } else if (!lc.bounded() || tc == kUnbounded) {
    out.z_bar = -kUnbounded;  // a full charge stretch constrains nothing here
  } else {
    out.z_bar = upper_envelope_extended(lc, sigma + tc) - lc.power_limit * tc;
  }
  out.z_under =
      td == kUnbounded ? lc.energy : lower_envelope_extended(lc, sigma + td);
  return out;
}

DeficiencyReport deficiency_report(const LoadClass& lc, const BatterySpec& spec,
                                   double chi, const AllocationProfile& alloc) {
  const double half = spec.volume / 2.0;
  if (std::abs(chi) > half + 1e-12 * std::max(1.0, half))
    throw std::domain_error("battery state outside [-volume/2, volume/2]");
  const DerivedCapacity cap = derive_capacity(lc);
  const double T = lc.window;

  DeficiencyReport rep;
  rep.budget = T * (cap.volume_max - spec.volume) / 2.0;

  const double tc = time_to_full(spec, chi);
  const double td = time_to_empty(spec, chi);
  const bool bar_active = lc.bounded() && tc != kUnbounded;
  const bool under_active = td != kUnbounded;

  // Grid refined with the shifted envelope kinks keeps both integrands
  // piecewise linear, so the positive-part integrals are exact.
  std::vector<double> grid = alloc.ages();
  if (lc.bounded()) {
    const EnvelopeBreakpoints bp = envelope_breakpoints(lc);
    const double kinks[] = {bp.upper_full - tc, bp.lower_rise - tc,
                            bp.lower_rise - td, T - td};
    for (double k : kinks)
      if (std::isfinite(k) && k > 0.0 && k < T) grid.push_back(k);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [&](double a, double b) {
                           return std::abs(a - b) <= 1e-15 * std::max(1.0, T);
                         }),
             grid.end());

  KahanSum bar_sum, under_sum;
  double prev_age = grid.front();
  CriticalProfiles prev_z = critical_profiles(lc, spec, chi, prev_age);
  double prev_x = alloc.value_at(prev_age);
  for (size_t i = 1; i < grid.size(); ++i) {
    const double age = grid[i];
    const CriticalProfiles z = critical_profiles(lc, spec, chi, age);
    const double x = alloc.value_at(age);
    if (bar_active)
      bar_sum.add(integrate_positive_segment(prev_age, age, prev_z.z_bar - prev_x,
                                             z.z_bar - x));
    if (under_active)
      under_sum.add(integrate_positive_segment(prev_age, age,
                                               prev_x - prev_z.z_under,
                                               x - z.z_under));
    prev_age = age;
    prev_z = z;
    prev_x = x;
  }
  rep.integral_delta_bar = bar_active ? bar_sum.value() : 0.0;
  rep.integral_delta_under = under_active ? under_sum.value() : 0.0;
  const double tol = 1e-13 * std::max(1.0, lc.energy * T);
  rep.feasible = rep.integral_delta_bar <= rep.budget + tol &&
                 rep.integral_delta_under <= rep.budget + tol;
  return rep;
}

AreaConditionResult area_condition_holds(const LoadClass& lc,
                                         const BatterySpec& spec) {
  const DerivedCapacity cap = derive_capacity(lc);
  const double T = lc.window, E = lc.energy;
  const double slop = 1e-12;
  if (spec.volume > cap.volume_max * (1.0 + slop) + slop)
    throw std::domain_error("battery volume exceeds the load-class maximum");
  if (cap.charge_rate_max != kUnbounded &&
      spec.charge_rate > cap.charge_rate_max * (1.0 + slop) + slop)
    throw std::domain_error("battery charge rate exceeds the load-class maximum");
  if (spec.discharge_rate > cap.discharge_rate_max * (1.0 + slop) + slop)
    throw std::domain_error(
        "battery discharge rate exceeds the load-class maximum");

  AreaConditionResult out;
  out.budget = (cap.volume_max - spec.volume) * T;

  // With no per-load power cap every battery under the componentwise maximum
  // is realizable, so there is nothing to exclude.
  if (!lc.bounded()) {
    out.holds = true;
    return out;
  }
  // A zero rate silences one of the two conflicting excursions.
  if (spec.charge_rate == 0.0 || spec.discharge_rate == 0.0) {
    out.holds = true;
    return out;
  }

  const double D = (1.0 - lc.nominal_rate() / lc.power_limit) * T;
  const double C = spec.volume;
  auto area_at = [&](double chi) {
    const double b = D - (C / 2.0 + chi) / spec.discharge_rate;
    const double h = E - lc.power_limit * (C / 2.0 - chi) / spec.charge_rate;
    return std::max(0.0, b) * std::max(0.0, h);
  };

  const double chi_lo = -C / 2.0, chi_hi = C / 2.0;
  const double chi_star =
      (spec.discharge_rate * D - spec.charge_rate * E / lc.power_limit) / 2.0;
  double best_chi = clampd(chi_star, chi_lo, chi_hi);
  double best = area_at(best_chi);
  auto consider = [&](double chi) {
    const double a = area_at(chi);
    if (a > best) {
      best = a;
      best_chi = chi;
    }
  };
  consider(chi_lo);
  consider(chi_hi);
  for (int i = 1; i < 1024; ++i)
    consider(chi_lo + (chi_hi - chi_lo) * (static_cast<double>(i) / 1024.0));

  out.max_area = best;
  out.witness_chi = best_chi;
  out.holds = best <= out.budget + 1e-13 * std::max(1.0, E * T);
  return out;
}

}  // namespace vbcap
