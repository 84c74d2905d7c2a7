#pragma once

// Slow, independent reference computations the tests compare the library
// against. Nothing here may call the routine it is checking.

#include <cmath>
#include <cstdint>
#include <vector>

#include "vbcap/numeric.hpp"

namespace oracles {

// Deterministic uniform variates from the same splitmix stream everywhere,
// so test data does not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return vbcap::splitmix64(state_++); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

 private:
  std::uint64_t state_;
};

// Plain composite-trapezoid quadrature on a fine uniform grid.
template <typename F>
double quad_trapezoid(F&& f, double a, double b, int n) {
  vbcap::KahanSum acc;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) {
    const double x0 = a + i * h;
    const double x1 = a + (i + 1) * h;
    acc.add(0.5 * (f(x0) + f(x1)) * h);
  }
  return acc.value();
}

// Grid maximum of a scalar function, endpoints included.
template <typename F>
double grid_max(F&& f, double lo, double hi, int n) {
  double best = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double v = f(lo + (hi - lo) * i / n);
    if (v > best) best = v;
  }
  return best;
}

// Independent area-scan verdict in normalized units: worst overlap of the
// post-charge and pre-discharge wedges over all admissible starting states,
// on a dense grid plus the interval endpoints. Mirrors the appendix
// construction directly rather than the closed-form quadratic.
inline bool area_scan_feasible(double c, double w_bar, double w_under,
                               int n = 4096) {
  if (w_bar == 0.0 || w_under == 0.0) return true;
  const double lo = std::max(-c / 2.0, c / 2.0 - w_bar);
  const double hi = std::min(c / 2.0, w_under - c / 2.0);
  if (lo > hi) return true;
  const auto area = [&](double chi) {
    const double b = 1.0 - (c / 2.0 + chi) / w_under;
    const double h = 1.0 - (c / 2.0 - chi) / w_bar;
    return std::max(0.0, b) * std::max(0.0, h);
  };
  const double sup = grid_max(area, lo, hi, n);
  return sup <= (1.0 - c);
}

}  // namespace oracles
