// Serial vs OpenMP path simulation on the same streams.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mce/hjm.hpp"

int main(int argc, char** argv) {
  const std::size_t paths = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  mce::VolatilityParams vp;
  vp.num_factors = 2;
  vp.mean_reversion = {0.05, 0.3};
  vp.loadings = {0.008, 0.002, 0.0, 0.006};
  vp.kappa = {1.0};
  vp.theta = {1.0};
  vp.nu = {0.3};
  vp.rho = {-0.2, 0.0, 0.0, -0.1};
  const mce::VolatilitySpec model(vp);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.25 * i);

  auto time = [](auto&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(s, std::move(result));
  };
  auto [serial_s, serial] = time([&] { return mce::simulate_serial(model, grid, paths, 42); });
  auto [parallel_s, parallel] = time([&] { return mce::simulate(model, grid, paths, 42); });
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  const bool same = std::equal(serial.data().begin(), serial.data().end(), parallel.data().begin());
  std::printf("paths=%zu dates=%zu threads=%d\n", paths, grid.size(), threads);
  std::printf("serial   %.3fs\n", serial_s);
  std::printf("parallel %.3fs  speedup %.2fx  identical=%s\n", parallel_s, serial_s / parallel_s,
              same ? "yes" : "no");
  return same ? 0 : 1;
}
