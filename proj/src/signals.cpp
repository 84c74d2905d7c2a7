#include "vbcap/signals.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vbcap/csv.hpp"
#include "vbcap/numeric.hpp"

namespace vbcap {

Trajectory concat(const Trajectory& a, const Trajectory& b) {
  if (a.samples.empty()) return b;
  if (b.samples.empty()) return a;
  if (std::abs(a.dt - b.dt) > 1e-12 * a.dt)
    throw std::invalid_argument("concat: sample steps differ");
  Trajectory out = a;
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  return out;
}

namespace {

// Like BatterySpec::validated(), but admits the unbounded charge rate that
// the largest battery of an unbounded load class carries.
void check_signal_spec(const BatterySpec& spec) {
  if (!(std::isfinite(spec.volume) && spec.volume >= 0.0))
    throw std::invalid_argument("battery: volume must be finite and non-negative");
  if (!(spec.charge_rate >= 0.0))
    throw std::invalid_argument("battery: charge rate must be non-negative");
  if (!(std::isfinite(spec.discharge_rate) && spec.discharge_rate >= 0.0))
    throw std::invalid_argument(
        "battery: discharge rate must be finite and non-negative");
}

}  // namespace

MembershipResult membership_check(const Trajectory& traj,
                                  const BatterySpec& spec, double chi0) {
  check_signal_spec(spec);
  if (traj.dt <= 0.0 && !traj.samples.empty())
    throw std::invalid_argument("membership_check: sample step must be positive");
  const double tol = 1e-12;
  const double half = spec.volume / 2.0;
  KahanSum chi(chi0);
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double w = traj.samples[i];
    const double t = static_cast<double>(i) * traj.dt;
    if (spec.charge_rate != kUnbounded && w > spec.charge_rate + tol)
      return {false, ViolationKind::rate_high, t};
    if (w < -spec.discharge_rate - tol)
      return {false, ViolationKind::rate_low, t};
    chi.add(w * traj.dt);
    const double t_end = static_cast<double>(i + 1) * traj.dt;
    if (chi.value() > half + tol)
      return {false, ViolationKind::volume_high, t_end};
    if (chi.value() < -half - tol)
      return {false, ViolationKind::volume_low, t_end};
  }
  return {true, ViolationKind::none, 0.0};
}

Trajectory project_to_battery(const Trajectory& raw, const BatterySpec& spec,
                              double chi0) {
  check_signal_spec(spec);
  if (raw.dt <= 0.0 && !raw.samples.empty())
    throw std::invalid_argument("project_to_battery: sample step must be positive");
  const double half = spec.volume / 2.0;
  Trajectory out;
  out.dt = raw.dt;
  out.samples.reserve(raw.samples.size());
  KahanSum chi(chi0);
  for (double w : raw.samples) {
    if (spec.charge_rate != kUnbounded && w > spec.charge_rate)
      w = spec.charge_rate;
    if (w < -spec.discharge_rate) w = -spec.discharge_rate;
    const double ahead = chi.value() + w * raw.dt;
    if (ahead > half) w = (half - chi.value()) / raw.dt;
    if (ahead < -half) w = (-half - chi.value()) / raw.dt;
    out.samples.push_back(w);
    chi.add(w * raw.dt);
  }
  return out;
}

Trajectory piecewise_constant(
    const std::vector<std::pair<double, double>>& rate_duration, double dt) {
  if (dt <= 0.0)
    throw std::invalid_argument("piecewise_constant: sample step must be positive");
  Trajectory out;
  out.dt = dt;
  for (const auto& [rate, dur] : rate_duration) {
    if (!std::isfinite(rate))
      throw std::invalid_argument("piecewise_constant: rate must be finite");
    if (!std::isfinite(dur) || dur < 0.0)
      throw std::invalid_argument(
          "piecewise_constant: leg duration must be finite and non-negative");
    const long n = static_cast<long>(std::ceil(dur / dt - 1e-9));
    if (n <= 0) continue;
    for (long i = 0; i < n - 1; ++i) out.samples.push_back(rate);
    // Last sample carries the fractional remainder so the leg integrates to
    // exactly rate * dur.
    const double rem = dur - static_cast<double>(n - 1) * dt;
    out.samples.push_back(rate * rem / dt);
  }
  return out;
}

Trajectory extremal_probe(const BatterySpec& spec, ProbePattern pattern,
                          double dt, double chi0) {
  check_signal_spec(spec);
  const double half = spec.volume / 2.0;
  if (std::abs(chi0) > half + 1e-12 * std::max(1.0, half))
    throw std::invalid_argument("extremal_probe: chi0 outside [-volume/2, volume/2]");
  const double t_c = time_to_full(spec, chi0);
  const double t_d = time_to_empty(spec, chi0);

  std::vector<std::pair<double, double>> legs;
  auto push = [&legs](double rate, double dur) {
    if (dur == 0.0) return;
    if (dur == kUnbounded || rate == 0.0 || rate == kUnbounded ||
        rate == -kUnbounded)
      throw std::invalid_argument(
          "extremal_probe: a zero-rate battery cannot traverse its volume");
    legs.emplace_back(rate, dur);
  };

  // Full-volume traversal times; zero volume needs no time, a zero rate
  // cannot traverse at all and push() rejects the infinite duration.
  const double swing_down =
      spec.volume > 0.0 ? spec.volume / spec.discharge_rate : 0.0;
  const double swing_up =
      spec.volume > 0.0 ? spec.volume / spec.charge_rate : 0.0;
  switch (pattern) {
    case ProbePattern::charge_full:
      push(spec.charge_rate, t_c);
      break;
    case ProbePattern::discharge_empty:
      push(-spec.discharge_rate, t_d);
      break;
    case ProbePattern::charge_then_discharge:
      push(spec.charge_rate, t_c);
      push(-spec.discharge_rate, swing_down);
      break;
    case ProbePattern::discharge_then_charge:
      push(-spec.discharge_rate, t_d);
      push(spec.charge_rate, swing_up);
      break;
  }
  Trajectory out = piecewise_constant(legs, dt);
  if (out.samples.empty()) out.dt = dt;
  return out;
}

Trajectory constant_signal(double level, double duration, double dt) {
  if (!(duration > 0.0))
    throw std::invalid_argument("constant_signal: duration must be positive");
  if (!std::isfinite(level))
    throw std::invalid_argument("constant_signal: level must be finite");
  return piecewise_constant({{level, duration}}, dt);
}

Trajectory square_wave(double amplitude, double period, double duration,
                       double dt) {
  if (!(period > 0.0))
    throw std::invalid_argument("square_wave: period must be positive");
  if (!(duration > 0.0))
    throw std::invalid_argument("square_wave: duration must be positive");
  if (dt <= 0.0)
    throw std::invalid_argument("square_wave: sample step must be positive");
  const long n = static_cast<long>(std::ceil(duration / dt - 1e-9));
  Trajectory out;
  out.dt = dt;
  out.samples.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double phase = std::fmod(t + period / 4.0, period);
    out.samples.push_back(phase < period / 2.0 ? amplitude : -amplitude);
  }
  return out;
}

Trajectory random_walk(std::uint64_t seed, double step_sd, double duration,
                       double dt) {
  if (!(duration > 0.0))
    throw std::invalid_argument("random_walk: duration must be positive");
  if (dt <= 0.0)
    throw std::invalid_argument("random_walk: sample step must be positive");
  if (!(step_sd >= 0.0))
    throw std::invalid_argument("random_walk: step deviation must be >= 0");
  std::mt19937_64 gen(seed);
  // Box-Muller with a fixed draw order; std::normal_distribution is not
  // pinned across standard libraries, this is.
  auto gauss = [&gen]() {
    const double u1 =
        (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  };
  const long n = static_cast<long>(std::ceil(duration / dt - 1e-9));
  Trajectory out;
  out.dt = dt;
  out.samples.reserve(static_cast<std::size_t>(n));
  double w = 0.0;
  for (long i = 0; i < n; ++i) {
    w += step_sd * gauss();
    out.samples.push_back(w);
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "t,w\n";
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    out += format_double(static_cast<double>(i) * traj.dt);
    out += ',';
    out += format_double(traj.samples[i]);
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  const CsvTable table = parse_csv(text);
  if (table.header.size() != 2 || table.header[0] != "t" ||
      table.header[1] != "w")
    throw std::invalid_argument("trajectory: expected header t,w");
  if (table.rows.size() < 2)
    throw std::invalid_argument("trajectory: need at least two samples");
  const double dt = table.rows[1][0] - table.rows[0][0];
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory: times must increase");
  Trajectory out;
  out.dt = dt;
  out.samples.reserve(table.rows.size());
  const double span = table.rows.back()[0];
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double expect = static_cast<double>(i) * dt;
    if (std::abs(table.rows[i][0] - expect) > 1e-6 * std::max(1.0, span))
      throw std::invalid_argument("trajectory: samples are not uniformly spaced");
    out.samples.push_back(table.rows[i][1]);
  }
  return out;
}

}  // namespace vbcap
