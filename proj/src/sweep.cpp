#include "vbcap/sweep.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "vbcap/capacity.hpp"
#include "vbcap/numeric.hpp"

namespace vbcap {

std::vector<ProbeRun> adversarial_suite(const LoadClass& lc,
                                        const BatterySpec& spec, double dt) {
  lc.validated();
  spec.validated();
  if (!(dt > 0.0))
    throw std::invalid_argument("adversarial_suite: dt must be positive");

  const double T = lc.window;
  const double C = spec.volume;
  const double wb = spec.charge_rate;
  const double wu = spec.discharge_rate;
  const double half = C / 2.0;

  std::vector<ProbeRun> suite;
  if (C == 0.0 || (wb == 0.0 && wu == 0.0)) {
    // Nothing can move chi; holding nominal is the only member.
    suite.push_back(
        {"hold", ProfileKind::nominal, 0.0, constant_signal(0.0, 2.0 * T, dt)});
    return suite;
  }
  if (wu == 0.0) {
    // Only the upward half is reachable. Start full, climb back, hold.
    Trajectory t = concat(
        extremal_probe(spec, ProbePattern::charge_full, dt, -half),
        constant_signal(0.0, T, dt));
    suite.push_back(
        {"charge_full_hold", ProfileKind::charge_equalized, -half, t});
    return suite;
  }
  if (wb == 0.0) {
    Trajectory t = concat(
        extremal_probe(spec, ProbePattern::discharge_empty, dt, half),
        constant_signal(0.0, T, dt));
    suite.push_back(
        {"discharge_empty_hold", ProfileKind::discharge_equalized, half, t});
    return suite;
  }

  // Full swings both ways with window-scale holds between them, so the fleet
  // has to absorb each excursion from a settled state.
  const std::vector<std::pair<double, double>> up_first = {
      {wb, half / wb}, {0.0, T / 2.0}, {-wu, C / wu},
      {0.0, T / 2.0},  {wb, C / wb},
  };
  const std::vector<std::pair<double, double>> down_first = {
      {-wu, half / wu}, {0.0, T / 2.0}, {wb, C / wb},
      {0.0, T / 2.0},   {-wu, C / wu},
  };
  suite.push_back({"swing_up_first", ProfileKind::nominal, 0.0,
                   piecewise_constant(up_first, dt)});
  suite.push_back({"swing_down_first", ProfileKind::nominal, 0.0,
                   piecewise_constant(down_first, dt)});

  // Turn at the battery state the area condition flags as tightest.
  double chi_w = 0.0;
  try {
    chi_w = area_condition_holds(lc, spec).witness_chi;
  } catch (const std::exception&) {
    chi_w = 0.0;  // spec outside the class maximum, skip the witness turn
  }
  if (std::abs(chi_w) > 1e-9) {
    std::vector<std::pair<double, double>> legs;
    if (chi_w > 0.0)
      legs = {{wb, chi_w / wb},
              {-wu, (chi_w + half) / wu},
              {0.0, T / 2.0},
              {wb, C / wb}};
    else
      legs = {{-wu, -chi_w / wu},
              {wb, (half - chi_w) / wb},
              {0.0, T / 2.0},
              {-wu, C / wu}};
    suite.push_back({"witness_turn", ProfileKind::nominal, 0.0,
                     piecewise_constant(legs, dt)});
  }
  return suite;
}

SuiteOutcome run_adversarial_suite(const LoadClass& lc, const BatterySpec& spec,
                                   const SimConfig& base_cfg) {
  SuiteOutcome out;
  out.tracked = true;
  for (const ProbeRun& pr : adversarial_suite(lc, spec, base_cfg.dt)) {
    SimConfig cfg = base_cfg;
    cfg.lc = lc;
    cfg.initial_profile = pr.init;
    cfg.initial_chi = pr.chi0;
    const SimResult res = run(cfg, pr.traj);
    ++out.runs;
    if (res.verdict != Verdict::tracked) {
      ++out.failed_runs;
      if (out.first_failed.empty()) out.first_failed = pr.name;
      out.tracked = false;
    }
  }
  return out;
}

std::vector<EmpiricalFrontierPoint> empirical_frontier(
    const EmpiricalFrontierConfig& cfg, double c, int n_grid, bool parallel) {
  cfg.lc.validated();
  if (!cfg.lc.bounded())
    throw std::invalid_argument(
        "empirical_frontier: needs a finite power limit");
  if (!(c >= 0.0 && c <= 1.0))
    throw std::invalid_argument("empirical_frontier: c must be in [0, 1]");
  if (n_grid < 2)
    throw std::invalid_argument("empirical_frontier: need at least two points");

  std::vector<EmpiricalFrontierPoint> out(static_cast<std::size_t>(n_grid));

#if defined(VBCAP_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int i = 0; i < n_grid; ++i) {
    const double w_bar =
        static_cast<double>(i) / static_cast<double>(n_grid - 1);
    SimConfig base;
    base.lc = cfg.lc;
    base.lambda = cfg.lambda;
    base.dt = cfg.dt;
    base.warmup = 2.0 * cfg.lc.window;
    base.policy = cfg.policy;
    base.mode = SimMode::strict;
    base.seed = splitmix64(cfg.seed ^ static_cast<std::uint64_t>(i + 1));
    base.record_steps = false;

    auto tracked_at = [&](double w_under) {
      const BatterySpec spec =
          denormalize({c, w_bar, w_under}, cfg.lc);
      return run_adversarial_suite(cfg.lc, spec, base).tracked;
    };

    EmpiricalFrontierPoint pt;
    pt.w_bar = w_bar;
    if (tracked_at(1.0)) {
      pt.w_under = 1.0;
      pt.tracked = true;
    } else if (!tracked_at(cfg.w_floor)) {
      pt.w_under = 0.0;
      pt.tracked = false;
    } else {
      double lo = cfg.w_floor, hi = 1.0;
      for (int it = 0; it < cfg.bisect_iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        (tracked_at(mid) ? lo : hi) = mid;
      }
      pt.w_under = lo;
      pt.tracked = true;
    }
    out[static_cast<std::size_t>(i)] = pt;
  }
  return out;
}

}  // namespace vbcap
