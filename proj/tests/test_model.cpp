#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "support/oracles.hpp"
#include "vbcap/model.hpp"

using namespace vbcap;

namespace {

const LoadClass kRef{1.0, 1.0, 2.0};

LoadClass random_bounded_class(oracles::Rng& rng) {
  LoadClass lc;
  lc.energy = rng.uniform(0.1, 10.0);
  lc.window = rng.uniform(0.1, 10.0);
  lc.power_limit = lc.nominal_rate() * rng.uniform(1.0, 100.0);
  return lc;
}

}  // namespace

TEST_CASE("load class validation") {
  CHECK_NOTHROW(kRef.validated());
  CHECK_NOTHROW((LoadClass{1.0, 1.0, kUnbounded}.validated()));
  // power_limit == nominal rate is allowed: the class is rigid, not invalid.
  CHECK_NOTHROW((LoadClass{2.0, 1.0, 2.0}.validated()));

  CHECK_THROWS_AS((LoadClass{0.0, 1.0, 2.0}.validated()), std::invalid_argument);
  CHECK_THROWS_AS((LoadClass{-1.0, 1.0, 2.0}.validated()), std::invalid_argument);
  CHECK_THROWS_AS((LoadClass{1.0, 0.0, 2.0}.validated()), std::invalid_argument);
  CHECK_THROWS_AS((LoadClass{1.0, 1.0, 0.5}.validated()), std::invalid_argument);
}

TEST_CASE("derived capacity of the reference class") {
  const DerivedCapacity cap = derive_capacity(kRef);
  CHECK(cap.volume_max == 0.5);
  CHECK(cap.charge_rate_max == 1.0);
  CHECK(cap.discharge_rate_max == 1.0);

  const BatterySpec top = max_battery(kRef);
  CHECK(top.volume == 0.5);
  CHECK(top.charge_rate == 1.0);
  CHECK(top.discharge_rate == 1.0);
}

TEST_CASE("derived capacity of an unbounded class") {
  const LoadClass lc{3.0, 2.0, kUnbounded};
  const DerivedCapacity cap = derive_capacity(lc);
  CHECK(cap.volume_max == 3.0);
  CHECK(cap.charge_rate_max == kUnbounded);
  CHECK(cap.discharge_rate_max == 1.5);
}

TEST_CASE("derived capacity scales with the power margin") {
  oracles::Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const LoadClass lc = random_bounded_class(rng);
    const DerivedCapacity cap = derive_capacity(lc);
    const double p0 = lc.nominal_rate();
    CHECK(cap.volume_max ==
          doctest::Approx(lc.energy * (1.0 - p0 / lc.power_limit))
              .epsilon(1e-12));
    CHECK(cap.charge_rate_max ==
          doctest::Approx(lc.power_limit - p0).epsilon(1e-12));
    CHECK(cap.discharge_rate_max == doctest::Approx(p0).epsilon(1e-12));
  }
}

TEST_CASE("envelope values on the reference class") {
  // Upper envelope rises at full power and saturates; lower stays at zero
  // until the deadline forces full power.
  CHECK(upper_envelope(kRef, 0.0) == 0.0);
  CHECK(upper_envelope(kRef, 0.25) == 0.5);
  CHECK(upper_envelope(kRef, 0.5) == 1.0);
  CHECK(upper_envelope(kRef, 0.75) == 1.0);

  CHECK(lower_envelope(kRef, 0.5) == 0.0);
  CHECK(lower_envelope(kRef, 0.75) == 0.5);
  CHECK(lower_envelope(kRef, 1.0) == 1.0);

  CHECK(nominal_energy(kRef, 0.25) == 0.25);

  const EnvelopeBreakpoints bp = envelope_breakpoints(kRef);
  CHECK(bp.upper_full == 0.5);
  CHECK(bp.lower_rise == 0.5);
}

TEST_CASE("envelope ordering and endpoint pinning") {
  oracles::Rng rng(12);
  for (int i = 0; i < 30; ++i) {
    const LoadClass lc = random_bounded_class(rng);
    CHECK(upper_envelope(lc, 0.0) == 0.0);
    CHECK(lower_envelope(lc, 0.0) == 0.0);
    CHECK(upper_envelope(lc, lc.window) == lc.energy);
    CHECK(lower_envelope(lc, lc.window) == lc.energy);
    for (int j = 0; j <= 64; ++j) {
      const double sigma = lc.window * j / 64.0;
      const double lo = lower_envelope(lc, sigma);
      const double mid = nominal_energy(lc, sigma);
      const double hi = upper_envelope(lc, sigma);
      CHECK(0.0 <= lo);
      CHECK(lo <= mid + 1e-12);
      CHECK(mid <= hi + 1e-12);
      CHECK(hi <= lc.energy);
    }
  }
}

TEST_CASE("unbounded class envelopes are the rectangle") {
  const LoadClass lc{2.0, 4.0, kUnbounded};
  CHECK(upper_envelope(lc, 0.0) == 0.0);
  // Any positive age already admits the full energy.
  CHECK(upper_envelope(lc, 1e-12) == 2.0);
  CHECK(lower_envelope(lc, 4.0 - 1e-12) == 0.0);
  CHECK(lower_envelope(lc, 4.0) == 2.0);
}

TEST_CASE("extended envelopes are total") {
  CHECK(upper_envelope_extended(kRef, -3.0) == 0.0);
  CHECK(lower_envelope_extended(kRef, -3.0) == 0.0);
  CHECK(upper_envelope_extended(kRef, 7.0) == 1.0);
  CHECK(lower_envelope_extended(kRef, 7.0) == 1.0);
  CHECK_THROWS_AS(upper_envelope(kRef, -3.0), std::domain_error);
  CHECK_THROWS_AS(lower_envelope(kRef, 7.0), std::domain_error);
}

TEST_CASE("slack times at the reference point") {
  CHECK(charge_slack(kRef, 0.25, 0.25) == 0.375);
  CHECK(discharge_slack(kRef, 0.25, 0.25) == 0.375);
  CHECK_THROWS_AS(charge_slack(kRef, 0.9, 0.25), std::domain_error);
  CHECK_THROWS_AS(discharge_slack(kRef, -0.1, 0.25), std::domain_error);
}

TEST_CASE("slacks partition the remaining window") {
  oracles::Rng rng(13);
  for (int i = 0; i < 30; ++i) {
    const LoadClass lc = random_bounded_class(rng);
    for (int j = 0; j < 16; ++j) {
      const double sigma = rng.uniform(0.0, lc.window);
      const double lo = lower_envelope(lc, sigma);
      const double hi = upper_envelope(lc, sigma);
      const double x = rng.uniform(lo, hi);
      const double sb = charge_slack(lc, x, sigma);
      const double su = discharge_slack(lc, x, sigma);
      CHECK(sb >= 0.0);
      CHECK(su >= -1e-12);
      CHECK(sb + su == doctest::Approx(lc.window - sigma).epsilon(1e-9));
    }
  }
}

TEST_CASE("unbounded loads have zero charge slack") {
  const LoadClass lc{2.0, 4.0, kUnbounded};
  CHECK(charge_slack(lc, 0.5, 1.0) == 0.0);
  CHECK(discharge_slack(lc, 0.5, 1.0) == 3.0);
}

TEST_CASE("battery timing") {
  const BatterySpec spec{0.5, 1.0, 1.0};
  CHECK(time_to_full(spec, 0.0) == 0.25);
  CHECK(time_to_empty(spec, 0.0) == 0.25);
  CHECK(time_to_full(spec, 0.25) == 0.0);
  CHECK(time_to_empty(spec, -0.25) == 0.0);
  CHECK(time_to_full(spec, -0.25) == 0.5);

  const BatterySpec idle{0.5, 0.0, 0.0};
  CHECK(time_to_full(idle, 0.0) == kUnbounded);
  CHECK(time_to_empty(idle, 0.0) == kUnbounded);

  CHECK_THROWS_AS(time_to_full(spec, 0.3), std::domain_error);
  CHECK_THROWS_AS(time_to_empty(spec, -0.3), std::domain_error);
}

TEST_CASE("battery spec validation") {
  CHECK_NOTHROW((BatterySpec{0.5, 1.0, 1.0}.validated()));
  CHECK_NOTHROW((BatterySpec{0.0, 0.0, 0.0}.validated()));
  CHECK_THROWS_AS((BatterySpec{-0.1, 1.0, 1.0}.validated()), std::invalid_argument);
  CHECK_THROWS_AS((BatterySpec{0.5, kUnbounded, 1.0}.validated()), std::invalid_argument);
}

TEST_CASE("normalization round trip") {
  const BatterySpec spec{0.25, 0.5, 0.5};
  const NormalizedBattery nb = normalize(spec, kRef);
  CHECK(nb.c == 0.5);
  CHECK(nb.w_bar == 0.5);
  CHECK(nb.w_under == 0.5);

  const BatterySpec back = denormalize(nb, kRef);
  CHECK(back.volume == spec.volume);
  CHECK(back.charge_rate == spec.charge_rate);
  CHECK(back.discharge_rate == spec.discharge_rate);

  oracles::Rng rng(14);
  for (int i = 0; i < 40; ++i) {
    const LoadClass lc = random_bounded_class(rng);
    const NormalizedBattery raw{rng.uniform01(), rng.uniform01(),
                                rng.uniform01()};
    const BatterySpec abs = denormalize(raw, lc);
    const NormalizedBattery again = normalize(abs, lc);
    CHECK(again.c == doctest::Approx(raw.c).epsilon(1e-12));
    CHECK(again.w_bar == doctest::Approx(raw.w_bar).epsilon(1e-12));
    CHECK(again.w_under == doctest::Approx(raw.w_under).epsilon(1e-12));
  }
}

TEST_CASE("normalization rejects degenerate classes") {
  // A rigid class (power_limit == nominal rate) has no battery to scale by.
  const LoadClass rigid{2.0, 1.0, 2.0};
  CHECK_THROWS_AS((normalize(BatterySpec{0.0, 0.0, 0.0}, rigid)),
                  std::domain_error);
  CHECK_THROWS_AS((denormalize(NormalizedBattery{0.5, 0.5, 0.5}, rigid)),
                  std::domain_error);

  const LoadClass free_class{1.0, 1.0, kUnbounded};
  CHECK_THROWS_AS((normalize(BatterySpec{0.5, 1.0, 1.0}, free_class)),
                  std::domain_error);
}
