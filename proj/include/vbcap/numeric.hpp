#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace vbcap {

// Neumaier-compensated accumulator. Used wherever a long running sum feeds a
// tolerance that plain double addition would eat into (running integrals over
// 1e5 samples drift around 1e-11 uncompensated, which is above the 1e-12
// membership tolerance).
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }
};

// Stateless mixer; per-index seeding keeps parallel sweeps independent of
// thread scheduling.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Exact integral of max(0, f) over [a, b] for f linear with endpoint values
// fa, fb. Splits at the sign crossing so piecewise-linear integrands are
// integrated without quadrature error.
inline double integrate_positive_segment(double a, double b, double fa, double fb) {
  const double w = b - a;
  if (!(w > 0)) return 0.0;
  if (fa >= 0 && fb >= 0) return 0.5 * (fa + fb) * w;
  if (fa <= 0 && fb <= 0) return 0.0;
  const double r = fa / (fa - fb);  // crossing fraction, in (0, 1)
  if (fa > 0) return 0.5 * fa * r * w;
  return 0.5 * fb * (1.0 - r) * w;
}

inline double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
  KahanSum s;
  for (size_t i = 1; i < xs.size(); ++i)
    s.add(0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]));
  return s.value();
}

}  // namespace vbcap
