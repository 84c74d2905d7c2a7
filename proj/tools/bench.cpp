// Wall-time comparison of the serial and parallel sweep kernels, plus a
// bitwise-equality check: the parallel path must produce exactly the serial
// result, or the determinism guarantees of the CLI are broken.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "vbcap/capacity.hpp"
#include "vbcap/sweep.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int compare_frontier(int n) {
  std::printf("analytic frontier, c = 0.5, n = %d\n", n);
  auto t0 = std::chrono::steady_clock::now();
  const auto serial = vbcap::frontier_curve(0.5, n, /*parallel=*/false);
  const double ts = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto parallel = vbcap::frontier_curve(0.5, n, /*parallel=*/true);
  const double tp = seconds_since(t0);
  bool equal = serial.size() == parallel.size();
  for (std::size_t i = 0; equal && i < serial.size(); ++i)
    equal = serial[i].w_bar == parallel[i].w_bar &&
            serial[i].w_under == parallel[i].w_under;
  std::printf("  serial   %8.3f s\n", ts);
  std::printf("  parallel %8.3f s  (speedup %.2fx)\n", tp,
              tp > 0.0 ? ts / tp : 0.0);
  std::printf("  bitwise equal: %s\n", equal ? "yes" : "NO");
  return equal ? 0 : 1;
}

int compare_empirical() {
  vbcap::EmpiricalFrontierConfig cfg;
  cfg.lc = {1.0, 1.0, 2.0};
  cfg.lambda = 20.0;
  cfg.dt = 1e-3;
  cfg.bisect_iters = 4;
  const int n = 5;
  std::printf("empirical frontier, c = 0.5, n = %d, lambda T = 20\n", n);
  auto t0 = std::chrono::steady_clock::now();
  const auto serial = vbcap::empirical_frontier(cfg, 0.5, n, false);
  const double ts = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto parallel = vbcap::empirical_frontier(cfg, 0.5, n, true);
  const double tp = seconds_since(t0);
  bool equal = serial.size() == parallel.size();
  for (std::size_t i = 0; equal && i < serial.size(); ++i)
    equal = serial[i].w_bar == parallel[i].w_bar &&
            serial[i].w_under == parallel[i].w_under &&
            serial[i].tracked == parallel[i].tracked;
  std::printf("  serial   %8.3f s\n", ts);
  std::printf("  parallel %8.3f s  (speedup %.2fx)\n", tp,
              tp > 0.0 ? ts / tp : 0.0);
  std::printf("  bitwise equal: %s\n", equal ? "yes" : "NO");
  return equal ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  bool empirical = false;
  int n = 20001;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--empirical") == 0) empirical = true;
    if (std::strcmp(argv[i], "--quick") == 0) n = 2001;
  }
  int rc = compare_frontier(n);
  if (empirical) rc |= compare_empirical();
  return rc;
}
