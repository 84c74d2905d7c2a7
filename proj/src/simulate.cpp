#include "vbcap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vbcap/allocation.hpp"
#include "vbcap/csv.hpp"
#include "vbcap/numeric.hpp"

namespace vbcap {

namespace {

double clampd(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

}  // namespace

PowerInterval feasible_power_interval(const LoadClass& lc, double energy,
                                      double age, double dt) {
  lc.validated();
  const double t_slop = 1e-9 * std::max(1.0, lc.window);
  if (age < -t_slop || age > lc.window - dt + t_slop)
    throw std::invalid_argument("feasible_power_interval: age outside the window");
  if (!(dt > 0.0))
    throw std::invalid_argument("feasible_power_interval: dt must be positive");
  const double remaining = std::max(lc.window - age, dt);
  const double need = std::max(0.0, lc.energy - energy);
  const bool bounded = lc.bounded();
  if (bounded &&
      need > lc.power_limit * remaining + 1e-9 * std::max(1.0, lc.energy))
    throw std::domain_error("load cannot finish inside its window");

  PowerInterval out;
  out.p_max = bounded ? std::min(lc.power_limit, need / dt) : need / dt;
  const double slack = std::max(0.0, remaining - dt);
  if (bounded)
    out.p_min = clampd((need - lc.power_limit * slack) / dt, 0.0, out.p_max);
  else
    out.p_min = slack > 0.0 ? 0.0 : out.p_max;
  return out;
}

AllocateOutcome allocate_step(const std::vector<LoadView>& loads,
                              double aggregate_target, PolicyKind policy,
                              const LoadClass& lc, double dt,
                              const std::function<double(double)>& steer) {
  lc.validated();
  if (!(dt > 0.0))
    throw std::invalid_argument("allocate_step: dt must be positive");
  if (!std::isfinite(aggregate_target))
    throw std::invalid_argument("allocate_step: target must be finite");
  if (policy == PolicyKind::target_profile && !steer)
    throw std::invalid_argument("allocate_step: target_profile needs a steering curve");

  const std::size_t n = loads.size();
  AllocateOutcome out;
  out.powers.assign(n, 0.0);
  if (n == 0) {
    out.clamped = std::abs(aggregate_target) > 1e-9;
    return out;
  }

  std::vector<PowerInterval> band(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      band[i] = feasible_power_interval(lc, loads[i].energy, loads[i].age, dt);
    } catch (const std::domain_error&) {
      // Past saving; run it flat out and let the retirement check report it.
      out.hard_infeasible = true;
      const double need = std::max(0.0, lc.energy - loads[i].energy);
      const double p = std::min(lc.power_limit, need / dt);
      band[i] = {p, p};
    }
  }

  KahanSum sum_min, sum_max;
  for (const auto& b : band) {
    sum_min.add(b.p_min);
    sum_max.add(b.p_max);
  }
  const double eff = clampd(aggregate_target, sum_min.value(), sum_max.value());
  const double eps =
      1e-9 * std::max(1.0, static_cast<double>(n) * lc.nominal_rate());
  out.clamped = std::abs(aggregate_target - eff) > eps;

  for (std::size_t i = 0; i < n; ++i) out.powers[i] = band[i].p_min;
  double pool = eff - sum_min.value();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  if (pool > 0.0) {
    switch (policy) {
      case PolicyKind::charge_slack_greedy: {
        // Largest charge slack (emptiest load) first. loads arrive oldest
        // first, so stable sort keeps ties in age-descending order.
        std::vector<double> key(n);
        for (std::size_t i = 0; i < n; ++i)
          key[i] = lc.bounded()
                       ? (lc.energy - loads[i].energy) / lc.power_limit
                       : 0.0;
        std::stable_sort(order.begin(), order.end(),
                         [&key](std::size_t a, std::size_t b) {
                           return key[a] > key[b];
                         });
        for (std::size_t i : order) {
          const double add = std::min(pool, band[i].p_max - out.powers[i]);
          out.powers[i] += add;
          pool -= add;
          if (pool <= 0.0) break;
        }
        break;
      }
      case PolicyKind::discharge_slack_greedy: {
        // Smallest discharge slack first: those closest to being forced
        // onto the catch-up ramp absorb the surplus.
        std::vector<double> key(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double sbar =
              lc.bounded() ? (lc.energy - loads[i].energy) / lc.power_limit
                           : 0.0;
          key[i] = (lc.window - loads[i].age) - sbar;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&key](std::size_t a, std::size_t b) {
                           return key[a] < key[b];
                         });
        for (std::size_t i : order) {
          const double add = std::min(pool, band[i].p_max - out.powers[i]);
          out.powers[i] += add;
          pool -= add;
          if (pool <= 0.0) break;
        }
        break;
      }
      case PolicyKind::nominal_proportional: {
        KahanSum headroom;
        for (const auto& b : band) headroom.add(b.p_max - b.p_min);
        const double frac =
            headroom.value() > 0.0 ? clampd(pool / headroom.value(), 0.0, 1.0)
                                   : 0.0;
        for (std::size_t i = 0; i < n; ++i)
          out.powers[i] += frac * (band[i].p_max - band[i].p_min);
        break;
      }
      case PolicyKind::target_profile:
        break;  // handled below, surplus and deficit together
    }
  }

  if (policy == PolicyKind::target_profile) {
    std::vector<double> des(n);
    KahanSum sum_des;
    for (std::size_t i = 0; i < n; ++i) {
      const double want = (steer(loads[i].age + dt) - loads[i].energy) / dt;
      des[i] = clampd(want, band[i].p_min, band[i].p_max);
      sum_des.add(des[i]);
    }
    out.powers = des;
    double delta = eff - sum_des.value();
    if (delta > 0.0) {
      // Most underserved relative to the steering curve first.
      std::vector<double> dev(n);
      for (std::size_t i = 0; i < n; ++i)
        dev[i] = steer(loads[i].age + dt) - (loads[i].energy + des[i] * dt);
      std::stable_sort(
          order.begin(), order.end(),
          [&dev](std::size_t a, std::size_t b) { return dev[a] > dev[b]; });
      for (std::size_t i : order) {
        const double add = std::min(delta, band[i].p_max - out.powers[i]);
        out.powers[i] += add;
        delta -= add;
        if (delta <= 0.0) break;
      }
    } else if (delta < 0.0) {
      std::vector<double> over(n);
      for (std::size_t i = 0; i < n; ++i)
        over[i] = (loads[i].energy + des[i] * dt) - steer(loads[i].age + dt);
      std::stable_sort(
          order.begin(), order.end(),
          [&over](std::size_t a, std::size_t b) { return over[a] > over[b]; });
      for (std::size_t i : order) {
        const double sub = std::min(-delta, out.powers[i] - band[i].p_min);
        out.powers[i] -= sub;
        delta += sub;
        if (delta >= 0.0) break;
      }
    }
  }

  KahanSum total;
  for (double p : out.powers) total.add(p);
  out.effective_total = total.value();
  return out;
}

namespace {

struct ActiveLoad {
  double energy = 0.0;
  long arrival_step = 0;
};

// Steering curves used by the runner. The warm-up holds the configured
// initial profile; the main phase, when the policy asks for it, follows the
// equalized family at the ideal battery state.
class SteerCurves {
 public:
  SteerCurves(const LoadClass& lc, SteerKind kind) : lc_(lc), kind_(kind) {
    half_ = derive_capacity(lc).volume_max / 2.0;
    ramp_span_ = lc.bounded() ? (1.0 - lc.nominal_rate() / lc.power_limit) *
                                    lc.window
                              : lc.window;
  }

  std::function<double(double)> at_chi(double chi) const {
    const double c = clampd(chi, -half_, half_);
    const LoadClass lc = lc_;
    if (kind_ == SteerKind::charge) {
      double level;
      if (!lc.bounded()) {
        level = c + lc.energy / 2.0;
      } else if (ramp_span_ > 0.0) {
        const double stored_quad =
            lc.energy * lc.energy / (2.0 * lc.power_limit);
        level = clampd(
            (lc.window * (c + lc.energy / 2.0) - stored_quad) / ramp_span_,
            0.0, lc.energy);
      } else {
        level = 0.0;  // envelopes coincide, the clamp decides everything
      }
      return [lc, level](double age) {
        return clampd(level, lower_envelope_extended(lc, age),
                      upper_envelope_extended(lc, age));
      };
    }
    if (!lc.bounded()) {
      // Discharge family degenerates to a step at the split age.
      const double split =
          lc.window - clampd((c + lc.energy / 2.0) / lc.nominal_rate(), 0.0,
                             lc.window);
      return [lc, split](double age) { return age >= split ? lc.energy : 0.0; };
    }
    const double stored_quad = lc.energy * lc.energy / (2.0 * lc.power_limit);
    const double anchor = clampd(
        (lc.window * (c + lc.energy / 2.0) - stored_quad) / lc.energy, 0.0,
        ramp_span_);
    return [lc, anchor](double age) {
      const double ramp =
          lc.energy - lc.power_limit * (lc.window - age - anchor);
      return clampd(ramp, lower_envelope_extended(lc, age),
                    upper_envelope_extended(lc, age));
    };
  }

 private:
  LoadClass lc_;
  SteerKind kind_;
  double half_ = 0.0;
  double ramp_span_ = 0.0;
};

long checked_count(double value, double unit, const char* what) {
  const double ratio = value / unit;
  const long n = std::lround(ratio);
  if (n < 0 || std::abs(ratio - static_cast<double>(n)) >
                   1e-9 * std::max(1.0, std::abs(ratio)))
    throw std::invalid_argument(what);
  return n;
}

}  // namespace

SimResult run(const SimConfig& cfg, const Trajectory& traj) {
  const LoadClass lc = cfg.lc.validated();
  if (!(cfg.dt > 0.0))
    throw std::invalid_argument("run: dt must be positive");
  if (!(cfg.lambda > 0.0))
    throw std::invalid_argument("run: lambda must be positive");
  if (!traj.samples.empty() &&
      std::abs(traj.dt - cfg.dt) > 1e-12 * cfg.dt)
    throw std::invalid_argument("run: trajectory step must match the simulation step");

  const long k =
      checked_count(1.0, cfg.lambda * cfg.dt,
                    "run: 1/lambda must be a whole number of steps");
  if (k < 1) throw std::invalid_argument("run: dt exceeds the arrival spacing");
  const long n_loads = checked_count(
      lc.window, 1.0 / cfg.lambda,
      "run: window must be a whole number of arrival intervals");
  if (n_loads < 1)
    throw std::invalid_argument("run: need at least one arrival per window");
  const long steps_per_window = n_loads * k;
  if (cfg.warmup < lc.window - 1e-9 * std::max(1.0, lc.window))
    throw std::invalid_argument("run: warm-up must cover at least one window");
  const long warmup_arrivals = checked_count(
      cfg.warmup, 1.0 / cfg.lambda,
      "run: warm-up must be a whole number of arrival intervals");
  const long warmup_steps = warmup_arrivals * k;
  const long main_steps = static_cast<long>(traj.samples.size());
  const long total_steps = warmup_steps + main_steps;

  // Initial profile, also the warm-up steering target.
  AllocationProfile init_profile = [&] {
    switch (cfg.initial_profile) {
      case ProfileKind::charge_equalized:
        return charge_slack_equalized(lc, cfg.initial_chi);
      case ProfileKind::discharge_equalized:
        return discharge_slack_equalized(lc, cfg.initial_chi);
      case ProfileKind::nominal:
      default: {
        std::vector<double> ages = default_age_grid(lc);
        std::vector<double> values(ages.size());
        for (std::size_t i = 0; i < ages.size(); ++i)
          values[i] = lc.nominal_rate() * ages[i];
        return AllocationProfile::create(lc, std::move(ages),
                                         std::move(values));
      }
    }
  }();

  std::vector<ActiveLoad> loads;  // oldest first
  loads.reserve(static_cast<std::size_t>(n_loads));
  for (long j = n_loads - 1; j >= 0; --j) {
    const double age = static_cast<double>(j) / cfg.lambda;
    loads.push_back({init_profile.value_at(age), -j * k});
  }

  const double p0 = lc.nominal_rate();
  const double fleet = static_cast<double>(n_loads);
  const double e_tol = 1e-9 * std::max(1.0, lc.energy);

  const SteerCurves curves(lc, cfg.steer_profile);
  const auto warmup_steer = [&init_profile](double age) {
    return init_profile.value_at(age);
  };
  const double chi_start =
      cfg.initial_profile == ProfileKind::nominal ? 0.0 : cfg.initial_chi;
  KahanSum chi_ideal(chi_start);

  SimResult res;
  if (cfg.record_steps)
    res.records.reserve(static_cast<std::size_t>(main_steps));
  KahanSum chi_rec;
  bool chi_rec_anchored = false;

  auto population_x_avg = [&loads, p0, fleet](long next_step, double dt) {
    KahanSum acc;
    for (const ActiveLoad& ld : loads) {
      const double age =
          static_cast<double>(next_step - ld.arrival_step) * dt;
      acc.add(ld.energy - p0 * age);
    }
    return acc.value() / fleet;
  };

  std::vector<LoadView> views(static_cast<std::size_t>(n_loads));
  std::vector<InfeasibleEvent> events;
  double last_x_avg = population_x_avg(0, cfg.dt);

  for (long s = 0; s < total_steps; ++s) {
    // Retire loads whose window closed at this step boundary.
    while (!loads.empty() &&
           s - loads.front().arrival_step >= steps_per_window) {
      const ActiveLoad done = loads.front();
      loads.erase(loads.begin());
      if (std::abs(done.energy - lc.energy) > e_tol) ++res.deadline_failures;
      ++res.loads_completed;
      res.energy_delivered += done.energy;
    }
    if (s > 0 && s % k == 0) loads.push_back({0.0, s});
    if (static_cast<long>(loads.size()) != n_loads)
      throw std::logic_error("run: population size drifted");

    const bool main = s >= warmup_steps;
    if (main && !chi_rec_anchored) {
      chi_rec = KahanSum(population_x_avg(s, cfg.dt));
      chi_rec_anchored = true;
    }
    const double w_t = main ? traj.samples[static_cast<std::size_t>(
                                  s - warmup_steps)]
                            : 0.0;
    const double target = fleet * (p0 + w_t);
    const double t_now =
        static_cast<double>(s - warmup_steps) * cfg.dt;

    for (std::size_t i = 0; i < views.size(); ++i) {
      views[i].energy = loads[i].energy;
      views[i].age =
          static_cast<double>(s - loads[i].arrival_step) * cfg.dt;
    }

    PolicyKind phase_policy =
        main ? cfg.policy : PolicyKind::target_profile;
    std::function<double(double)> steer;
    if (!main) {
      steer = warmup_steer;
    } else if (cfg.policy == PolicyKind::target_profile) {
      chi_ideal.add(w_t * cfg.dt);
      steer = curves.at_chi(chi_ideal.value());
    }

    const AllocateOutcome out =
        allocate_step(views, target, phase_policy, lc, cfg.dt, steer);
    const bool infeasible = out.clamped || out.hard_infeasible;
    if (infeasible)
      events.push_back({t_now, (target - out.effective_total) / fleet});

    for (std::size_t i = 0; i < loads.size(); ++i)
      loads[i].energy += out.powers[i] * cfg.dt;

    const double w_achieved = out.effective_total / fleet - p0;
    if (main) {
      chi_rec.add(w_achieved * cfg.dt);
      last_x_avg = population_x_avg(s + 1, cfg.dt);
      res.max_tracking_error =
          std::max(res.max_tracking_error, std::abs(w_achieved - w_t));
      if (cfg.record_steps)
        res.records.push_back({t_now, w_t, w_achieved, chi_rec.value(),
                               last_x_avg, static_cast<int>(loads.size()),
                               infeasible});
    }
  }

  if (!chi_rec_anchored) chi_rec = KahanSum(population_x_avg(total_steps, cfg.dt));
  res.events = std::move(events);
  res.final_chi = chi_rec.value();
  res.final_x_avg = population_x_avg(total_steps, cfg.dt);
  if (main_steps == 0) res.final_x_avg = last_x_avg;
  res.verdict = cfg.mode == SimMode::strict
                    ? ((res.events.empty() && res.deadline_failures == 0)
                           ? Verdict::tracked
                           : Verdict::failed)
                    : (res.deadline_failures == 0 ? Verdict::tracked
                                                  : Verdict::failed);
  return res;
}

std::string SimResult::records_csv(
    const std::vector<std::pair<std::string, std::string>>& header_echo)
    const {
  std::string out;
  for (const auto& [key, value] : header_echo)
    out += "# " + key + " = " + value + "\n";
  out += "t,w_target,w_achieved,chi,x_avg,n_active,infeasible\n";
  for (const StepRecord& r : records) {
    out += format_double(r.t);
    out += ',';
    out += format_double(r.w_target);
    out += ',';
    out += format_double(r.w_achieved);
    out += ',';
    out += format_double(r.chi);
    out += ',';
    out += format_double(r.x_avg);
    out += ',';
    out += std::to_string(r.n_active);
    out += ',';
    out += r.infeasible ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string SimResult::events_csv() const {
  std::string out = "t,shortfall\n";
  for (const InfeasibleEvent& e : events) {
    out += format_double(e.t);
    out += ',';
    out += format_double(e.shortfall);
    out += '\n';
  }
  return out;
}

}  // namespace vbcap
