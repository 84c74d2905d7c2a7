#include "vbcap/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vbcap/csv.hpp"
#include "vbcap/numeric.hpp"

namespace vbcap {

namespace {

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

void dedupe_sorted(std::vector<double>& xs, double tol) {
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [&](double a, double b) { return std::abs(a - b) <= tol; }),
           xs.end());
}

}  // namespace

AllocationProfile AllocationProfile::create(const LoadClass& lc,
                                            std::vector<double> ages,
                                            std::vector<double> values) {
  lc.validated();
  if (ages.size() != values.size())
    throw std::invalid_argument("profile: ages and values differ in length");
  if (ages.size() < 2) throw std::invalid_argument("profile: need at least 2 nodes");
  const double T = lc.window, E = lc.energy;
  const double age_tol = 1e-12 * std::max(1.0, T);
  for (size_t i = 1; i < ages.size(); ++i)
    if (!(ages[i] > ages[i - 1]))
      throw std::invalid_argument("profile: ages must be strictly increasing");
  if (std::abs(ages.front()) > age_tol)
    throw std::invalid_argument("profile: grid must start at age 0");
  ages.front() = 0.0;
  if (std::abs(ages.back() - T) > age_tol)
    throw std::invalid_argument("profile: grid must end at the window");
  ages.back() = T;

  const double e_tol = 1e-9 * std::max(1.0, E);
  for (size_t i = 0; i < ages.size(); ++i) {
    if (values[i] < lower_envelope_extended(lc, ages[i]) - e_tol ||
        values[i] > upper_envelope_extended(lc, ages[i]) + e_tol)
      throw std::invalid_argument("profile: value outside the energy envelopes");
  }
  if (std::abs(values.front()) > e_tol)
    throw std::invalid_argument("profile: allocation must start at 0");
  if (std::abs(values.back() - E) > e_tol)
    throw std::invalid_argument("profile: allocation must end at the full demand");

  const EnvelopeBreakpoints bp = envelope_breakpoints(lc);
  for (double b : {bp.upper_full, bp.lower_rise}) {
    if (b <= age_tol || b >= T - age_tol) continue;  // endpoint, always present
    bool found = false;
    for (double a : ages)
      if (std::abs(a - b) <= age_tol) {
        found = true;
        break;
      }
    if (!found)
      throw std::invalid_argument("profile: grid must include the envelope breakpoints");
  }

  AllocationProfile p;
  p.lc_ = lc;
  p.ages_ = std::move(ages);
  p.values_ = std::move(values);
  return p;
}

double AllocationProfile::value_at(double sigma) const {
  const double s = clampd(sigma, ages_.front(), ages_.back());
  auto it = std::upper_bound(ages_.begin(), ages_.end(), s);
  if (it == ages_.begin()) return values_.front();
  if (it == ages_.end()) return values_.back();
  const size_t hi = static_cast<size_t>(it - ages_.begin());
  const size_t lo = hi - 1;
  const double span = ages_[hi] - ages_[lo];
  const double f = (s - ages_[lo]) / span;
  return values_[lo] + f * (values_[hi] - values_[lo]);
}

std::string AllocationProfile::to_csv() const {
  std::string out = "sigma,x,x_upper,x_lower,charge_slack,discharge_slack\n";
  for (size_t i = 0; i < ages_.size(); ++i) {
    const double s = ages_[i], x = values_[i];
    const double sb = charge_slack(lc_, x, s);
    out += format_double(s);
    out += ',';
    out += format_double(x);
    out += ',';
    out += format_double(upper_envelope_extended(lc_, s));
    out += ',';
    out += format_double(lower_envelope_extended(lc_, s));
    out += ',';
    out += format_double(sb);
    out += ',';
    out += format_double(lc_.window - s - sb);
    out += '\n';
  }
  return out;
}

std::vector<double> default_age_grid(const LoadClass& lc, int intervals) {
  if (intervals < 1) throw std::invalid_argument("grid needs at least 1 interval");
  const double T = lc.window;
  std::vector<double> grid;
  grid.reserve(static_cast<size_t>(intervals) + 3);
  for (int i = 0; i <= intervals; ++i)
    grid.push_back(T * (static_cast<double>(i) / static_cast<double>(intervals)));
  const EnvelopeBreakpoints bp = envelope_breakpoints(lc);
  for (double b : {bp.upper_full, bp.lower_rise})
    if (b > 0.0 && b < T) grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  dedupe_sorted(grid, 1e-15 * std::max(1.0, T));
  grid.front() = 0.0;
  grid.back() = T;
  return grid;
}

double average_stored_energy(const AllocationProfile& profile) {
  const LoadClass& lc = profile.load();
  const double p0 = lc.nominal_rate();
  const auto& ages = profile.ages();
  const auto& values = profile.values();
  std::vector<double> rel(ages.size());
  for (size_t i = 0; i < ages.size(); ++i) rel[i] = values[i] - p0 * ages[i];
  return trapezoid(ages, rel) / lc.window;
}

namespace {

void check_chi_target(const LoadClass& lc, double chi_target) {
  const double half = derive_capacity(lc).volume_max / 2.0;
  if (std::abs(chi_target) > half + 1e-12 * std::max(1.0, lc.energy))
    throw std::domain_error("stored-energy target outside [" +
                            format_double(-half) + ", " + format_double(half) +
                            "]");
}

// Profile over the jump family for unbounded power: zero up to the split
// age, full beyond it. h keeps the polyline strictly increasing in age.
AllocationProfile jump_profile(const LoadClass& lc, double varsigma) {
  const double T = lc.window, E = lc.energy;
  const double h = 1e-12 * std::max(1.0, T);
  const double sj = clampd(T - varsigma, 0.0, T);
  std::vector<double> ages{0.0}, vals{0.0};
  const double lo = std::max(sj - h, h);
  const double hi = std::min(sj + h, T - h);
  if (lo < hi) {
    ages.push_back(lo);
    vals.push_back(0.0);
    ages.push_back(hi);
    vals.push_back(E);
  } else if (sj <= 2.0 * h) {
    ages.push_back(h);
    vals.push_back(E);
  } else {
    ages.push_back(T - h);
    vals.push_back(0.0);
  }
  ages.push_back(T);
  vals.push_back(E);
  return AllocationProfile::create(lc, std::move(ages), std::move(vals));
}

AllocationProfile level_profile(const LoadClass& lc, double level) {
  const double T = lc.window, E = lc.energy;
  std::vector<double> grid = default_age_grid(lc);
  if (lc.bounded()) {
    const double D = (1.0 - lc.nominal_rate() / lc.power_limit) * T;
    for (double k : {level / lc.power_limit, D + level / lc.power_limit})
      if (k > 0.0 && k < T) grid.push_back(k);
    std::sort(grid.begin(), grid.end());
    dedupe_sorted(grid, 1e-15 * std::max(1.0, T));
  }
  std::vector<double> vals(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    vals[i] = clampd(level, lower_envelope_extended(lc, grid[i]),
                     upper_envelope_extended(lc, grid[i]));
  vals.front() = 0.0;
  vals.back() = E;
  return AllocationProfile::create(lc, std::move(grid), std::move(vals));
}

AllocationProfile ramp_profile(const LoadClass& lc, double slack) {
  const double T = lc.window, E = lc.energy;
  std::vector<double> grid = default_age_grid(lc);
  for (double k : {T - slack - E / lc.power_limit, T - slack})
    if (k > 0.0 && k < T) grid.push_back(k);
  std::sort(grid.begin(), grid.end());
  dedupe_sorted(grid, 1e-15 * std::max(1.0, T));
  std::vector<double> vals(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    const double ramp = E - lc.power_limit * (T - grid[i] - slack);
    vals[i] = clampd(ramp, lower_envelope_extended(lc, grid[i]),
                     upper_envelope_extended(lc, grid[i]));
  }
  vals.front() = 0.0;
  vals.back() = E;
  return AllocationProfile::create(lc, std::move(grid), std::move(vals));
}

}  // namespace

AllocationProfile charge_slack_equalized(const LoadClass& lc,
                                         double chi_target) {
  check_chi_target(lc, chi_target);
  const double T = lc.window, E = lc.energy;
  const double half = derive_capacity(lc).volume_max / 2.0;
  if (!lc.bounded()) {
    // All slacks are already maximal; hold the interior at a flat level.
    const double level = clampd(chi_target + E / 2.0, 0.0, E);
    const double h = 1e-12 * std::max(1.0, T);
    std::vector<double> ages{0.0, h, T - h, T};
    std::vector<double> vals{0.0, level, level, E};
    return AllocationProfile::create(lc, std::move(ages), std::move(vals));
  }
  if (std::abs(chi_target - half) <= 1e-9) return level_profile(lc, E);
  if (std::abs(chi_target + half) <= 1e-9) return level_profile(lc, 0.0);

  const double pbar = lc.power_limit;
  const double D = (1.0 - lc.nominal_rate() / pbar) * T;
  // Exact stored energy of clamp(level, envelopes): level rides between the
  // two envelope crossings, which are D apart.
  auto stored = [&](double level) {
    return (level * D + E * E / (2.0 * pbar)) / T - E / 2.0;
  };
  double lo = 0.0, hi = E;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (stored(mid) < chi_target ? lo : hi) = mid;
  }
  return level_profile(lc, 0.5 * (lo + hi));
}

AllocationProfile discharge_slack_equalized(const LoadClass& lc,
                                            double chi_target) {
  check_chi_target(lc, chi_target);
  const double T = lc.window, E = lc.energy;
  const double half = derive_capacity(lc).volume_max / 2.0;
  if (!lc.bounded())
    return jump_profile(lc, (chi_target + E / 2.0) / lc.nominal_rate());
  if (std::abs(chi_target - half) <= 1e-9)
    return ramp_profile(lc, (1.0 - lc.nominal_rate() / lc.power_limit) * T);
  if (std::abs(chi_target + half) <= 1e-9) return ramp_profile(lc, 0.0);

  const double pbar = lc.power_limit;
  auto stored = [&](double slack) {
    return (E * slack + E * E / (2.0 * pbar)) / T - E / 2.0;
  };
  double lo = 0.0, hi = (1.0 - lc.nominal_rate() / pbar) * T;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (stored(mid) < chi_target ? lo : hi) = mid;
  }
  return ramp_profile(lc, 0.5 * (lo + hi));
}

FluidPolicyState initial_fluid_state(const LoadClass& lc, FluidPolicy policy,
                                     double chi0) {
  check_chi_target(lc, chi0);
  switch (policy) {
    case FluidPolicy::unbounded_split: {
      if (lc.bounded())
        throw std::invalid_argument(
            "the split policy needs an unbounded power limit");
      const double split = clampd(
          (lc.energy / 2.0 + chi0) / lc.nominal_rate(), 0.0, lc.window);
      return {jump_profile(lc, split), chi0, split};
    }
    case FluidPolicy::charge_greedy:
    case FluidPolicy::discharge_greedy:
      if (!lc.bounded())
        throw std::invalid_argument(
            "greedy fluid policies need a finite power limit");
      return {policy == FluidPolicy::charge_greedy
                  ? charge_slack_equalized(lc, chi0)
                  : discharge_slack_equalized(lc, chi0),
              chi0, 0.0};
  }
  throw std::invalid_argument("unknown fluid policy");
}

namespace {

// Insert grid nodes at the envelope kinks, interpolating the polyline, when
// aging has shifted them away. Keeping the kinks on the grid is what makes
// the trapezoid mass of a profile riding an envelope exact.
void insert_breakpoints(const LoadClass& lc, std::vector<double>& age,
                        std::vector<double>& val) {
  const double T = lc.window;
  const EnvelopeBreakpoints bp = envelope_breakpoints(lc);
  const double age_tol = 1e-12 * std::max(1.0, T);
  for (double b : {bp.upper_full, bp.lower_rise}) {
    if (b <= age_tol || b >= T - age_tol) continue;
    auto it = std::lower_bound(age.begin(), age.end(), b - age_tol);
    if (it != age.end() && std::abs(*it - b) <= age_tol) continue;
    const size_t hi_i = static_cast<size_t>(it - age.begin());
    const double f = (b - age[hi_i - 1]) / (age[hi_i] - age[hi_i - 1]);
    const double v = val[hi_i - 1] + f * (val[hi_i] - val[hi_i - 1]);
    age.insert(age.begin() + static_cast<long>(hi_i), b);
    val.insert(val.begin() + static_cast<long>(hi_i), v);
  }
}

FluidStepResult split_step(const FluidPolicyState& state, double w, double dt) {
  const LoadClass& lc = state.profile.load();
  const double E = lc.energy, T = lc.window, p0 = lc.nominal_rate();
  const double tol = 1e-9 * std::max(1.0, E);
  bool infeasible = false;
  double shortfall = 0.0;
  double chi = state.chi + w * dt;
  if (w < -p0 - 1e-9 * std::max(1.0, p0)) {
    infeasible = true;
    shortfall = w + p0;  // below the only rate the fleet can shed
  }
  if (chi > E / 2.0 + tol) {
    infeasible = true;
    shortfall = (chi - E / 2.0) / dt;
    chi = E / 2.0;
  } else if (chi < -E / 2.0 - tol) {
    infeasible = true;
    shortfall = (chi + E / 2.0) / dt;
    chi = -E / 2.0;
  }
  const double varsigma = clampd((E / 2.0 + chi) / p0, 0.0, T);
  return {{jump_profile(lc, varsigma), chi, varsigma}, infeasible, shortfall};
}

}  // namespace

FluidStepResult fluid_step(const FluidPolicyState& state, double w_value,
                           double dt, FluidPolicy policy) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (policy == FluidPolicy::unbounded_split)
    return split_step(state, w_value, dt);

  const LoadClass& lc = state.profile.load();
  if (!lc.bounded())
    throw std::invalid_argument(
        "greedy fluid policies need a finite power limit");
  const double T = lc.window, E = lc.energy, pbar = lc.power_limit;
  const double p0 = lc.nominal_rate();
  const double mass_tol = 1e-13 * std::max(1.0, E * T);

  const double mass0 = trapezoid(state.profile.ages(), state.profile.values());

  // Age everyone, drop what crossed the deadline, and pin fresh arrivals
  // and the deadline node.
  std::vector<double> age, x;
  age.reserve(state.profile.ages().size() + 4);
  x.reserve(age.capacity());
  age.push_back(0.0);
  x.push_back(0.0);
  bool deadline_broken = false;
  const auto& a0 = state.profile.ages();
  const auto& v0 = state.profile.values();
  const double e_tol = 1e-9 * std::max(1.0, E);
  for (size_t i = 0; i < a0.size(); ++i) {
    const double s = a0[i] + dt;
    if (s >= T) {
      // whoever leaves during this step must have been able to finish
      if (v0[i] < E - pbar * (T - a0[i]) - e_tol) deadline_broken = true;
      double xt;
      if (i == 0) {
        xt = v0[0];
      } else {
        const double f = (T - (a0[i - 1] + dt)) / (a0[i] - a0[i - 1]);
        xt = v0[i - 1] + f * (v0[i] - v0[i - 1]);
      }
      age.push_back(T);
      x.push_back(xt);
      break;
    }
    age.push_back(s);
    x.push_back(v0[i]);
  }
  if (age.back() != T) {  // profile shorter than the window cannot happen,
    age.push_back(T);     // but keep the node structure intact regardless
    x.push_back(E);
  }
  // A segment straddling a kink would otherwise cut the corner off the
  // reachable band; give the kink its own node before capping.
  insert_breakpoints(lc, age, x);

  const size_t n = age.size();
  std::vector<double> ylo(n), yhi(n);
  for (size_t i = 0; i < n; ++i) {
    ylo[i] = std::max(x[i], lower_envelope_extended(lc, age[i]));
    yhi[i] = std::min(x[i] + pbar * dt, upper_envelope_extended(lc, age[i]));
    if (ylo[i] > yhi[i]) {
      if (ylo[i] - yhi[i] > 1e-12 * std::max(1.0, E)) deadline_broken = true;
      ylo[i] = yhi[i];
    }
  }

  bool infeasible = deadline_broken;
  double shortfall = 0.0;
  // Exact balance: inflow at the aggregate rate, every leaver carries E out.
  double target = mass0 + T * (p0 + w_value) * dt - E * dt;
  const double mass_lo = trapezoid(age, ylo);
  const double mass_hi = trapezoid(age, yhi);
  if (target < mass_lo - mass_tol) {
    infeasible = true;
    shortfall = (target - mass_lo) / (T * dt);
    target = mass_lo;
  } else if (target > mass_hi + mass_tol) {
    infeasible = true;
    shortfall = (target - mass_hi) / (T * dt);
    target = mass_hi;
  }

  std::vector<double> y(n);
  auto fill_charge = [&](double level) {
    for (size_t i = 0; i < n; ++i) y[i] = clampd(level, ylo[i], yhi[i]);
  };
  auto fill_discharge = [&](double slack) {
    for (size_t i = 0; i < n; ++i)
      y[i] = clampd(E - pbar * (T - age[i] - slack), ylo[i], yhi[i]);
  };

  if (policy == FluidPolicy::charge_greedy) {
    double lo = 0.0, hi = E + pbar * dt;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      fill_charge(mid);
      const double m = trapezoid(age, y);
      if (std::abs(m - target) <= mass_tol) break;
      (m < target ? lo : hi) = mid;
    }
  } else {
    double lo = -(T + E / pbar), hi = T;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      fill_discharge(mid);
      const double m = trapezoid(age, y);
      if (std::abs(m - target) <= mass_tol) break;
      (m < target ? lo : hi) = mid;
    }
  }
  y.front() = 0.0;
  y[n - 1] = std::min(yhi[n - 1], E);
  if (std::abs(y[n - 1] - E) <= e_tol) y[n - 1] = E;
  if (deadline_broken) {
    // The run already failed; force the state back inside the envelopes so
    // it stays a valid profile for whoever keeps stepping.
    for (size_t i = 0; i < n; ++i)
      y[i] = clampd(y[i], lower_envelope_extended(lc, age[i]),
                    upper_envelope_extended(lc, age[i]));
    y[n - 1] = E;
  }

  // Drop interior nodes that sit exactly on the segment through their
  // neighbours, then restore the envelope breakpoints the aging shifted away.
  std::vector<double> page{age[0]};
  std::vector<double> pval{y[0]};
  for (size_t i = 1; i + 1 < n; ++i) {
    const double cross = (y[i + 1] - pval.back()) * (age[i] - page.back()) -
                         (y[i] - pval.back()) * (age[i + 1] - page.back());
    if (cross == 0.0) continue;
    page.push_back(age[i]);
    pval.push_back(y[i]);
  }
  page.push_back(age[n - 1]);
  pval.push_back(y[n - 1]);

  insert_breakpoints(lc, page, pval);

  const double mass1 = trapezoid(page, pval);
  const double w_eff = (mass1 - mass0 + E * dt) / (T * dt) - p0;
  return {{AllocationProfile::create(lc, std::move(page), std::move(pval)),
           state.chi + w_eff * dt, 0.0},
          infeasible, shortfall};
}

}  // namespace vbcap
